#ifndef OSCILLAX_HARNESS_HPP
#define OSCILLAX_HARNESS_HPP

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "oscillax/config.hpp"

namespace oscillax {

/// One CSV artifact. Cells are formatted when added so that output is
/// byte-identical for identical inputs.
class Table {
 public:
  using Cell = std::variant<double, long, std::string>;

  Table(std::string name, std::vector<std::string> columns);
  void add(const std::vector<Cell>& row);

  const std::string& name() const { return name_; }
  std::string file() const { return name_ + ".csv"; }
  std::size_t size() const { return rows_.size(); }
  std::string csv() const;

 private:
  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::string> rows_;
};

std::string format_number(double x);

struct Check {
  std::string name;
  double value{0};
  double threshold{0};
  std::string relation;  // "<=", ">=", ">", "==", or free text for composite checks
  bool passed{false};
};

/// What a mode produced. Every scalar and check lands in scalars.csv /
/// checks.csv, so summary.json carries nothing that is not also in a CSV.
struct RunReport {
  Mode mode{Mode::VerifyExact};
  std::vector<std::pair<std::string, double>> scalars;
  std::vector<Check> checks;
  std::vector<Table> tables;
  std::vector<std::string> errors;

  void scalar(const std::string& name, double value) { scalars.emplace_back(name, value); }
  const Check& check(const std::string& name, double value, const std::string& relation, double threshold);
  /// Records a check whose outcome was decided by the caller.
  const Check& check(const std::string& name, double value, const std::string& relation, double threshold,
                     bool passed);
  bool passed() const;
  nlohmann::json summary(const ScenarioConfig& config) const;
};

/// Writes summary.json, scalars.csv, checks.csv and every table into dir;
/// each file goes through a temporary name and a rename.
void write_artifacts(const RunReport& report, const ScenarioConfig& config, const std::filesystem::path& dir);

RunReport run_verify_exact(const ScenarioConfig& config);
RunReport run_simulate(const ScenarioConfig& config);
RunReport run_effective(const ScenarioConfig& config);
RunReport run_compare_homog(const ScenarioConfig& config);
RunReport run_mode(const ScenarioConfig& config);

struct ComparisonRow {
  double epsilon{0};
  double w1{0};          // max over windows of W1(F^eps, F_eff)
  double u_l2{0}, u_rel{0};
  double S_l2{0}, S_rel{0};
  double S2_l2{0};       // against the second effective system, when run
  double max_abs_u{0};
  double K_certified{0};
  bool K_ok{false};
  int momentum_violations{0};
  double energy_excess{0};
  long steps{0};
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  // log-log slopes of distance against epsilon; only with >= 3 epsilons
  std::optional<double> slope_w1, slope_u, slope_S;
  long effective_steps{0};
  long invariant_violations{0};
  double effective_dt{0};
  double effective_max_cfl{0};
  std::optional<double> cross_S_rel;  // effs1 vs effs2 at T, when effs2 was run
  Table windows{"homog_windows", {"epsilon", "x", "u_eps", "u_eff", "S_eps", "S_eff", "w1"}};
};

ComparisonReport compare_homogenization(const ScenarioConfig& config);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Exit codes.
constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

/// Loads, validates and runs; command-line values override the file.
int run(Mode mode, const std::filesystem::path& config_path, const std::optional<std::filesystem::path>& out,
        std::optional<std::uint64_t> seed, std::optional<int> threads);

}  // namespace oscillax

#endif  // OSCILLAX_HARNESS_HPP
