#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctxslu/diffcore.hpp"
#include "ctxslu/errors.hpp"

namespace ctxslu::diff {
namespace {

long double evaluate(const LossTermsFn& terms_fn, const ParameterStore& params) {
  Graph g(params);
  long double total = 0.0L;
  for (const Var& term : terms_fn(g)) total += term.scalar();
  return total;
}

std::vector<std::size_t> choose_entries(std::span<const double> autodiff, std::size_t limit,
                                        bool largest_only, Rng& rng) {
  std::vector<std::size_t> all(autodiff.size());
  std::iota(all.begin(), all.end(), 0);
  if (limit == 0 || limit >= all.size()) return all;
  const std::size_t top = largest_only ? limit : limit / 2;
  std::stable_sort(all.begin(), all.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(autodiff[a]) > std::abs(autodiff[b]);
  });
  std::vector<std::size_t> chosen(all.begin(), all.begin() + top);
  std::vector<std::size_t> rest(all.begin() + top, all.end());
  for (std::size_t k = 0; k < limit - top; ++k) {
    const std::size_t j = k + uniform_index(rng, rest.size() - k);
    std::swap(rest[k], rest[j]);
    chosen.push_back(rest[k]);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace

GradCheckReport finite_diff_check(const LossFn& loss_fn, ParameterStore& params,
                                  const GradCheckOptions& options) {
  return finite_diff_check(LossTermsFn([&](Graph& g) { return std::vector<Var>{loss_fn(g)}; }), params, options);
}

GradCheckReport finite_diff_check(const LossTermsFn& terms_fn, ParameterStore& params,
                                  const GradCheckOptions& options) {
  if (!(options.eps > 0.0 && options.eps <= 1e-2)) {
    throw DomainError("finite difference eps must lie in (0, 1e-2]");
  }
  GradientMap autodiff;
  long double baseline = 0.0L;
  {
    Graph g(params);
    const std::vector<Var> terms = terms_fn(g);
    if (terms.empty()) throw DomainError("loss has no terms");
    Var loss = terms.front();
    for (const Var& term : terms) baseline += term.scalar();
    for (std::size_t i = 1; i < terms.size(); ++i) loss = add(loss, terms[i]);
    g.backward(loss, autodiff);
  }
  const long double again = evaluate(terms_fn, params);
  if (again != baseline) throw DeterminismError("loss function is not deterministic");

  Rng rng = make_rng(options.seed, 0x67726164ULL);
  GradCheckReport report;
  for (ParamId id : params.ids()) {
    Tensor& t = params.tensor(id);
    std::vector<double> ad(t.size(), 0.0);
    if (autodiff.contains(id)) ad = autodiff.at(id);
    GradCheckEntry entry;
    entry.name = params.name(id);
    entry.total = t.size();
    for (std::size_t i : choose_entries(ad, options.max_entries_per_tensor, options.largest_only, rng)) {
      const double original = t.values[i];
      const double up = original + options.eps;
      const double down = original - options.eps;
      t.values[i] = up;
      const long double plus = evaluate(terms_fn, params);
      t.values[i] = down;
      const long double minus = evaluate(terms_fn, params);
      t.values[i] = original;
      // The representable step (up - down) differs from 2*eps by rounding.
      const double numeric = static_cast<double>((plus - minus) / (up - down));
      const double denom = std::max({std::abs(ad[i]), std::abs(numeric), 1e-8});
      const double rel = std::abs(ad[i] - numeric) / denom;
      if (entry.checked == 0 || rel > entry.max_rel_error) {
        entry.max_rel_error = rel;
        entry.worst_index = i;
        entry.worst_autodiff = ad[i];
        entry.worst_numeric = numeric;
      }
      ++entry.checked;
    }
    report.scalars_checked += entry.checked;
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace ctxslu::diff
