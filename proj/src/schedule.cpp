#include "huberpen/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace huberpen {

namespace {

void require_iteration(std::int64_t k, const char* where) {
  if (k < 1) throw std::invalid_argument(std::string(where) + ": k must be >= 1");
}

}  // namespace

double Schedule::gamma(std::int64_t k) const {
  require_iteration(k, "Schedule::gamma");
  return gamma0 * std::pow(static_cast<double>(k), g);
}

double Schedule::delta(std::int64_t k) const {
  require_iteration(k, "Schedule::delta");
  return delta0 * std::pow(static_cast<double>(k), -d);
}

double Schedule::step(std::int64_t k) const {
  require_iteration(k, "Schedule::step");
  return step0 * std::pow(static_cast<double>(k), -s);
}

double Schedule::drift_bound(double mu, std::int64_t k) const {
  require_iteration(k, "Schedule::drift_bound");
  if (!(mu > 0.0)) throw std::invalid_argument("Schedule::drift_bound: mu must be positive");
  const double gk = gamma(k);
  const double dk = delta(k);
  return ((gamma(k + 1) - gk) + gk * (dk - delta(k + 1)) / (2.0 * dk)) / mu;
}

double rate_exponent(const Schedule& sch) {
  return std::min({sch.s - 2.0 * sch.g, 2.0 - 2.0 * sch.s + 2.0 * sch.g, sch.d - sch.g});
}

std::vector<Diagnostic> validate(const Schedule& sch) {
  std::vector<Diagnostic> out;
  auto err = [&](std::string msg) { out.push_back({Severity::error, std::move(msg)}); };
  auto warn = [&](std::string msg) { out.push_back({Severity::warning, std::move(msg)}); };

  if (!(sch.g > 0.0)) err("g must be positive (gamma_k must grow)");
  if (!(sch.d > 0.0)) err("d must be positive (delta_k must shrink)");
  if (!(sch.s > 0.0) || sch.s > 1.0) err("s must lie in (0, 1]");
  if (sch.g > sch.d) err("g must not exceed d (gamma_k * delta_k would increase)");
  if (!(sch.gamma0 > 0.0)) err("gamma0 must be positive");
  if (!(sch.delta0 > 0.0)) err("delta0 must be positive");
  if (!(sch.step0 > 0.0)) err("step0 must be positive");

  if (out.empty()) {
    const double noise_exp = std::min(sch.s - 2.0 * sch.g, 2.0 - 2.0 * sch.s + 2.0 * sch.g);
    if (noise_exp <= 0.0)
      warn("noise exponent min{s-2g, 2-2s+2g} = " + std::to_string(noise_exp) +
           " is nonpositive; the mean-square error need not converge");
    if (sch.d - sch.g <= 0.0)
      warn("gap exponent d-g = " + std::to_string(sch.d - sch.g) +
           " is nonpositive; the penalized minimizers need not approach the optimum");
    out.push_back({Severity::info,
                   "predicted rate exponent " + std::to_string(rate_exponent(sch))});
  }
  return out;
}

bool is_valid(const std::vector<Diagnostic>& diags) {
  return std::none_of(diags.begin(), diags.end(),
                      [](const Diagnostic& d) { return d.severity == Severity::error; });
}

std::string to_string(const Diagnostic& diag) {
  const char* tag = diag.severity == Severity::error     ? "error"
                    : diag.severity == Severity::warning ? "warning"
                                                         : "info";
  return std::string(tag) + ": " + diag.message;
}

}  // namespace huberpen
