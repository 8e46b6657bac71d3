#ifndef OSCILLAX_CONFIG_HPP
#define OSCILLAX_CONFIG_HPP

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "oscillax/effective_solver.hpp"
#include "oscillax/exact_solutions.hpp"
#include "oscillax/stress_models.hpp"
#include "oscillax/weak_verifier.hpp"

namespace oscillax {

/// Anything wrong with a scenario file: syntax, missing keys, bad values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses TOML or JSON; JSON iff the first significant character is '{'.
nlohmann::json parse_config_text(std::string_view text, const std::string& origin = "<config>");
nlohmann::json load_config(const std::filesystem::path& path);

enum class Mode { VerifyExact, Simulate, Effective, CompareHomog };
Mode parse_mode(std::string_view name);
std::string mode_name(Mode mode);

/// c + a cos(k pi x) + b sin(k pi x).
struct ProfileSpec {
  double mean{0};
  double cos_amp{0};
  double sin_amp{0};
  int k{1};
  double operator()(double x) const;
};

struct LawSpec {
  std::string kind{"two-phase"};  // two-phase | affine | file
  double a{1}, b{3}, growth{3};
  TwoPhaseOptions two_phase{};
  double slope{1}, intercept{0}, lo{-100}, hi{100};
  std::filesystem::path file;
  StressLaw build() const;
};

struct PressureSpec {
  std::string kind{"matched"};  // matched | monotone | none | file
  PressureOptions matched{};
  double slope{1}, intercept{0};
  std::filesystem::path file;
  /// nullopt for the pressureless case.
  std::optional<PressureLaw> build(const ExactSolutionParams& p) const;
};

struct VerifySpec {
  std::vector<double> times{1.0, 1.5, 2.0};
  int k_max{5};
  int tests{10};
  double ball_radius{1.5};
  QuadratureSpec quad{};
  int n{1};
  double rh_tol{1e-12};
  double weak_tol{1e-8};
  std::vector<int> young_n{8, 16, 32, 64};
  double young_time{1.0};
  int young_cells{3072};
  int young_window{1024};
};

/// Two-state oscillatory data (alpha on a theta-fraction of each period) or
/// smooth profiles.
struct InitialSpec {
  std::string kind{"two-state"};  // two-state | profile
  double alpha{1}, beta{3}, theta{0.5};
  double epsilon{1.0 / 16};
  ProfileSpec u0{};
  ProfileSpec v0{};
};

struct SimulateSpec {
  int cells{512};
  double T{0.05};
  std::optional<double> dt;
  int snapshots{5};
  double energy_tol{1e-8};
  InitialSpec initial{};
  std::vector<double> epsilons;  // optional sweep; overrides initial.epsilon
};

struct EffectiveSpec {
  int cells{64};
  double T{0.1};
  double xi_step{0};  // 0 = 1 / cells
  double cfl{0.9};
  double dt_factor{0.25};  // dt <= dt_factor dx^2
  int snapshots{5};
  std::string system{"effs1"};  // effs1 | effs2 | both
  ReactionRule rule{ReactionRule::Exact};
  InitialSpec initial{"profile"};
  bool compare_direct{false};
  int refinements{0};  // extra levels at 2N, 4N, ... for self-convergence
  double direct_tol{0.05};
  double min_slope{0.8};
  double cross_tol{1e-3};
};

struct HomogSpec {
  std::vector<double> epsilons;
  int fine_cells{768};
  int effective_cells{96};
  double T{0.05};
  double window{1.0 / 3};
  double stride{1.0 / 96};
  double xi_step{1.0 / 64};
  double dt_factor{0.25};
  double u_rel_tol{0.1};
  bool effs2{false};
  InitialSpec initial{};
};

struct ScenarioConfig {
  Mode mode{Mode::VerifyExact};
  LawSpec law{};
  PressureSpec pressure{};
  ExactSolutionParams params{};
  VerifySpec verify{};
  SimulateSpec simulate{};
  EffectiveSpec effective{};
  HomogSpec homog{};
  std::uint64_t seed{20240531};
  int threads{1};
  std::filesystem::path out{"oscillax-out"};
  nlohmann::json source;  // the parsed document, echoed into the summary
};

/// Validates the document for the given mode. A `mode` key in the document,
/// if present, must agree.
ScenarioConfig scenario_from_json(const nlohmann::json& doc, Mode mode);

}  // namespace oscillax

#endif  // OSCILLAX_CONFIG_HPP
