#include "mechdetect/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mechdetect/error.hpp"

namespace mechdetect {

std::string_view to_string(LearningTask t) {
    switch (t) {
    case LearningTask::Complete: return "Complete";
    case LearningTask::Shuffled: return "Shuffled";
    case LearningTask::Excluded: return "Excluded";
    }
    return "?";
}

std::string_view to_string(MwuMethod m) {
    return m == MwuMethod::Exact ? "exact" : "normal";
}

double AucSamples::mean() const {
    if (scores.empty()) return 0.0;
    return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

namespace {

// Midranks (1-based) of `values`.
std::vector<double> midranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t k = i + 1;
        while (k < n && values[order[k]] == values[order[i]]) ++k;
        // Positions i..k-1 hold rank i+1 .. k; their mean is (i + 1 + k) / 2.
        const double rank = static_cast<double>(i + 1 + k) / 2.0;
        for (std::size_t m = i; m < k; ++m) ranks[order[m]] = rank;
        i = k;
    }
    return ranks;
}

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values)
        if (std::isnan(v)) throw InvalidArgument(std::string(what) + " contains NaN");
}

double u_statistic(std::span<const double> a, std::span<const double> b) {
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = midranks(pooled);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) rank_sum += ranks[i];
    const double n1 = static_cast<double>(a.size());
    return rank_sum - n1 * (n1 + 1.0) / 2.0;
}

bool has_ties(std::span<const double> a, std::span<const double> b) {
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    return std::adjacent_find(pooled.begin(), pooled.end()) != pooled.end();
}

std::uint64_t binomial(std::size_t n, std::size_t k) {
    std::uint64_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

void require_samples(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InvalidArgument("Mann-Whitney U needs two non-empty samples");
    require_finite(a, "first sample");
    require_finite(b, "second sample");
}

} // namespace

double auc_roc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size())
        throw InvalidArgument("auc_roc: scores and labels differ in length");
    require_finite(scores, "scores");
    std::size_t n_pos = 0;
    for (auto l : labels) {
        if (l > 1) throw InvalidArgument("auc_roc: labels must be 0 or 1");
        n_pos += l;
    }
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw InvalidArgument("auc_roc: labels contain a single class");

    const auto ranks = midranks(scores);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (labels[i]) rank_sum += ranks[i];
    const double np = static_cast<double>(n_pos);
    const double u = rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(n_neg));
}

std::vector<std::uint64_t> mwu_null_counts(std::size_t n1, std::size_t n2) {
    // f(m, n, u) = f(m - 1, n, u - n) + f(m, n - 1, u): the largest value
    // belongs to the first sample (beating all n of the second) or not.
    const std::size_t umax = n1 * n2;
    // table[m][n] holds the count vector for sizes (m, n).
    std::vector<std::vector<std::vector<std::uint64_t>>> table(
        n1 + 1, std::vector<std::vector<std::uint64_t>>(n2 + 1));
    for (std::size_t m = 0; m <= n1; ++m) {
        for (std::size_t n = 0; n <= n2; ++n) {
            auto& f = table[m][n];
            f.assign(m * n + 1, 0);
            if (m == 0 || n == 0) {
                f[0] = 1;
                continue;
            }
            const auto& take_first = table[m - 1][n];
            const auto& take_second = table[m][n - 1];
            for (std::size_t u = 0; u < take_second.size(); ++u) f[u] += take_second[u];
            for (std::size_t u = 0; u < take_first.size(); ++u) f[u + n] += take_first[u];
        }
    }
    auto out = std::move(table[n1][n2]);
    out.resize(umax + 1, 0);
    return out;
}

MwuResult mwu_greater_exact(std::span<const double> a, std::span<const double> b) {
    require_samples(a, b);
    if (a.size() > kMwuExactMaxSize || b.size() > kMwuExactMaxSize)
        throw InvalidArgument("exact Mann-Whitney U supports sample sizes up to 12");
    if (has_ties(a, b)) throw InvalidArgument("exact Mann-Whitney U requires tie-free samples");

    MwuResult r;
    r.method = MwuMethod::Exact;
    r.u_statistic = u_statistic(a, b);
    const auto counts = mwu_null_counts(a.size(), b.size());
    const auto u = static_cast<std::size_t>(r.u_statistic);
    std::uint64_t tail = 0;
    for (std::size_t k = u; k < counts.size(); ++k) tail += counts[k];
    r.p_value = static_cast<double>(tail) /
                static_cast<double>(binomial(a.size() + b.size(), a.size()));
    return r;
}

MwuResult mwu_greater_normal(std::span<const double> a, std::span<const double> b) {
    require_samples(a, b);
    MwuResult r;
    r.method = MwuMethod::NormalApprox;
    r.u_statistic = u_statistic(a, b);

    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    const double n = n1 + n2;

    std::map<double, std::size_t> multiplicity;
    for (double v : a) ++multiplicity[v];
    for (double v : b) ++multiplicity[v];
    double tie_term = 0.0;
    for (const auto& [value, t] : multiplicity) {
        const double td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }

    const double mean = n1 * n2 / 2.0;
    const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (!(var > 0.0)) {
        r.p_value = 1.0;
        return r;
    }
    const double z = (r.u_statistic - mean - 0.5) / std::sqrt(var);
    r.p_value = std::clamp(normal_sf(z), 0.0, 1.0);
    return r;
}

MwuResult mwu_greater(std::span<const double> a, std::span<const double> b) {
    require_samples(a, b);
    if (a.size() <= kMwuExactMaxSize && b.size() <= kMwuExactMaxSize && !has_ties(a, b))
        return mwu_greater_exact(a, b);
    return mwu_greater_normal(a, b);
}

MwuResult mwu_greater(const AucSamples& a, const AucSamples& b) {
    return mwu_greater(std::span<const double>(a.scores), std::span<const double>(b.scores));
}

double bonferroni_threshold(double alpha, std::size_t m) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (m < 1) throw InvalidArgument("number of tests must be >= 1");
    return alpha / static_cast<double>(m);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

} // namespace mechdetect
