#include "epitwin/agent/insights.hpp"

#include "epitwin/agent/prompts.hpp"
#include "epitwin/dsl/printer.hpp"
#include "epitwin/util/error.hpp"
#include "epitwin/util/log.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace epitwin::agent {

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b)
{
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if (va <= 0 || vb <= 0)
        return 0.0;
    return cov / std::sqrt(va * vb);
}

} // namespace

std::string extract_insights_offline(const eval::Dataset& data)
{
    std::ostringstream out;

    // Aggregate target over locations.
    std::vector<double> agg(data.T, 0.0);
    for (std::size_t t = 0; t < data.T; ++t)
        for (std::size_t l = 0; l < data.L; ++l)
            agg[t] += data.target(l, t);

    std::size_t peak_t = 0;
    for (std::size_t t = 1; t < data.T; ++t)
        if (agg[t] > agg[peak_t])
            peak_t = t;
    out << "Observation 1. The aggregated target peaks at t=" << peak_t << " (value "
        << dsl::format_number(agg[peak_t]) << " across " << data.L << " locations).\n"
        << "Tip 1. Parameter paths should allow transmission to rise before t=" << peak_t
        << " and decay after it.\n";

    const std::size_t q = std::max<std::size_t>(data.T / 4, 1);
    double head = 0, tail = 0;
    for (std::size_t t = 0; t < q; ++t)
        head += agg[t];
    for (std::size_t t = data.T - q; t < data.T; ++t)
        tail += agg[t];
    out << "Observation 2. The last-quarter mean is "
        << dsl::format_number(tail / static_cast<double>(q)) << " against "
        << dsl::format_number(head / static_cast<double>(q)) << " in the first quarter ("
        << (tail > head ? "rising" : "falling or flat") << " trend).\n"
        << "Tip 2. "
        << (tail > head ? "Keep susceptible replenishment (waning) so late growth is reachable."
                        : "Expect depletion; recovery and mortality flows should dominate late.")
        << '\n';

    // Seasonality heuristic: strongest autocorrelation over candidate lags.
    double best_corr = 0.0;
    std::size_t best_lag = 0;
    for (std::size_t lag = 2; lag + 2 < data.T / 2; ++lag) {
        std::vector<double> a(agg.begin(), agg.end() - static_cast<std::ptrdiff_t>(lag));
        std::vector<double> b(agg.begin() + static_cast<std::ptrdiff_t>(lag), agg.end());
        double c = pearson(a, b);
        if (c > best_corr) {
            best_corr = c;
            best_lag = lag;
        }
    }
    if (best_corr > 0.5)
        out << "Observation 3. The target autocorrelates at lag " << best_lag << " (r="
            << dsl::format_number(best_corr) << "), suggesting a seasonal cycle.\n"
            << "Tip 3. Let the calibration network express periodic transmission; the "
               "mechanistic side need not hard-code the season.\n";

    if (data.d <= 1) {
        out << "Observation 4. The dataset carries the target series only; no auxiliary "
               "features are available.\n"
            << "Tip 4. The network can only read the target's own history; prefer simple, "
               "well-identified structure.\n";
    } else {
        out << "Observation 4. Feature correlations with the target:";
        std::vector<double> target_flat;
        for (std::size_t l = 0; l < data.L; ++l)
            for (std::size_t t = 0; t < data.T; ++t)
                target_flat.push_back(data.target(l, t));
        for (std::size_t f = 0; f < data.d; ++f) {
            if (f == data.target_feature)
                continue;
            std::vector<double> feat;
            for (std::size_t l = 0; l < data.L; ++l)
                for (std::size_t t = 0; t < data.T; ++t)
                    feat.push_back(data.at(l, t, f));
            out << ' ' << data.feature_names[f] << "="
                << dsl::format_number(pearson(feat, target_flat));
        }
        out << "\nTip 4. Correlated signals justify time-varying parameters driven by the "
               "network.\n";
    }
    return out.str();
}

std::string extract_insights(const eval::Dataset& data, const LlmClient* llm)
{
    if (!llm)
        return extract_insights_offline(data);
    try {
        std::string completion =
            llm->complete({{"user", render_insights_prompt(data)}});
        const std::string marker = "###TIPs";
        std::size_t pos = completion.find(marker);
        if (pos == std::string::npos) {
            log::warn("insights completion lacks the ###TIPs marker; keeping the full text");
            return completion;
        }
        return completion.substr(pos + marker.size());
    } catch (const Error& e) {
        log::warn(std::string("insights endpoint failed (") + e.what() +
                  "); using the offline template");
        return extract_insights_offline(data);
    }
}

} // namespace epitwin::agent
