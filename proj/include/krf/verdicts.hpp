#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "krf/estimators.hpp"
#include "krf/model_spec.hpp"

namespace krf {

struct RateFit {
  double exponent = 0.0;
  double log_constant = 0.0;
  double r_squared = 0.0;
  double E_max = 0.0;
  double E_min = 0.0;
  int samples = 0;
};

struct VerdictTolerances {
  double slope_tol = 0.1;
  double ratio_tol = 10.0;
  double transient_fraction = 0.2;
  double min_decades = 1.5;
  int min_samples = 20;
  int resample_points = 60;
  double diam_exponent = 0.5;
  double diam_exponent_tol = 0.05;
  double diam_constant_rel = 0.005;
  double rate_min = 0.95;
  double volume_rel = 0.01;
  double type_i_limit_tol = 0.02;
  double zhang_factor = 10.0;
  double lipschitz_factor = 2.0;
  double c0_decrease = 10.0;
  // Series whose magnitude never exceeds this count as identically zero.
  double abs_floor = 1e-8;
};

// Least squares of log y against log ref. Throws InsufficientWindow when
// there are fewer than min_samples points or the span is under min_decades.
RateFit fit_power_law(const std::vector<double>& ref, const std::vector<double>& y, int min_samples = 20,
                      double min_decades = 1.5);

enum class RateReference { E, TimeToGo, SqrtE };
std::vector<double> reference_values(const ObservableSeries& s, RateReference ref, double T);

struct FitWindow {
  std::vector<std::size_t> index;
  double E_max = 0.0;
  double E_min = 0.0;
};

// Drops the first transient_fraction of the run (measured in log E) and
// samples within 2 eps_stop of T, then picks the sample nearest to each of
// resample_points log-uniform E values.
FitWindow fit_window(const ObservableSeries& s, const VerdictTolerances& tol, double T, double eps_stop);

// Additive constant of a pair of sup/inf distance series: intercept at E = 0
// of a line through the midpoints over the last decade of the window.
double fit_offset(const ObservableSeries& s, const FitWindow& w, const std::string& sup_key,
                  const std::string& inf_key);

enum class VerdictStatus { Passed, Failed, Skipped };
std::string to_string(VerdictStatus s);

struct TheoremVerdict {
  std::string theorem_id;
  VerdictStatus status = VerdictStatus::Skipped;
  std::map<std::string, double> measured;
  std::map<std::string, double> tolerance;
  double window_E_max = 0.0;
  double window_E_min = 0.0;
  std::string notes;

  bool passed() const { return status == VerdictStatus::Passed; }
};

nlohmann::json to_json(const TheoremVerdict& v);

// Facts about the run that some checks need.
struct VerdictContext {
  ModelKind kind = ModelKind::ProductFlat;
  PerturbationProfile profile = PerturbationProfile::Zero;
  double a0 = 2.0;
  double T = 0.0;
  double eps_stop = 1e-3;
  int n = 2;
  int m = 1;
  // Integral of 2 omega_0 ^ f*eta.
  double limit_volume = 0.0;
  // "spr" or "ske": which limit candidate the convergence checks use.
  std::string mode = "spr";
  // Sup of |rho_SPR|; nonzero means the spr-mode hypothesis does not hold.
  double rho_spr_sup = 0.0;

  bool exact_product() const { return kind == ModelKind::ProductFlat && profile == PerturbationProfile::Zero; }
};

const std::vector<std::string>& registry_ids();

TheoremVerdict check_theorem(const std::string& id, const ObservableSeries& series, const VerdictContext& ctx,
                             const VerdictTolerances& tol);

// Evaluates the registry (or the given subset) in registry order.
std::vector<TheoremVerdict> run_registry(const ObservableSeries& series, const VerdictContext& ctx,
                                         const VerdictTolerances& tol, const std::vector<std::string>& subset = {});

}  // namespace krf
