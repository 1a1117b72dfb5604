#include "isp/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace isp::ad {
namespace {

double evaluate(const ScalarFn& f, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Tensor> traced;
  traced.reserve(params.size());
  for (const auto& p : params) traced.push_back(tape.watch(p));
  return f(tape, traced).item();
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& params,
                           const std::vector<std::string>& names, const GradCheckOptions& opts) {
  if (!(opts.eps > 0.0 && opts.eps <= 1e-3)) throw std::invalid_argument("grad_check: eps must lie in (0, 1e-3]");

  std::vector<Tensor> base;
  base.reserve(params.size());
  for (const auto& p : params) base.push_back(p.detached());

  Tape tape;
  std::vector<Tensor> traced;
  for (const auto& p : base) traced.push_back(tape.watch(p));
  Tensor root = f(tape, traced);
  Gradients grads = tape.backprop(root);

  GradCheckReport report;
  for (std::size_t k = 0; k < base.size(); ++k) {
    ParamCheck check;
    check.name = k < names.size() ? names[k] : "param" + std::to_string(k);
    auto analytic = grads.of(traced[k]);
    bool nan_seen = false;

    std::vector<Tensor> probe = base;
    for (std::size_t i = 0; i < base[k].numel(); ++i) {
      probe[k] = Tensor(base[k].shape(), std::vector<double>(base[k].data().begin(), base[k].data().end()));
      const double x0 = base[k][i];
      probe[k].mutable_data()[i] = x0 + opts.eps;
      const double fp = evaluate(f, probe);
      probe[k].mutable_data()[i] = x0 - opts.eps;
      const double fm = evaluate(f, probe);
      const double numeric = (fp - fm) / (2.0 * opts.eps);
      const double a = analytic ? (*analytic)[i] : 0.0;
      if (std::isnan(a) || std::isnan(numeric)) {
        nan_seen = true;
        continue;
      }
      const double denom = std::max({std::abs(a), std::abs(numeric), opts.abs_floor});
      check.max_rel_error = std::max(check.max_rel_error, std::abs(a - numeric) / denom);
    }
    probe[k] = base[k];
    check.passed = !nan_seen && check.max_rel_error < opts.tol;
    if (nan_seen) check.max_rel_error = std::numeric_limits<double>::quiet_NaN();
    report.passed = report.passed && check.passed;
    if (!std::isnan(check.max_rel_error)) report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.params.push_back(std::move(check));
  }
  return report;
}

}  // namespace isp::ad
