#include "flowshap/normalizer.hpp"

#include <cmath>

#include "flowshap/errors.hpp"
#include "flowshap/numfmt.hpp"

namespace flowshap {

std::string_view to_string(NormMethod m) {
  return m == NormMethod::kMinMax ? "minmax" : "zscore";
}

NormMethod norm_method_from_string(std::string_view s) {
  if (s == "minmax") return NormMethod::kMinMax;
  if (s == "zscore") return NormMethod::kZScore;
  throw ConfigError("unknown normalization method '" + std::string(s) + "'");
}

NormalizerParams fit_normalizer(const Dataset& ds, NormMethod method) {
  if (ds.n_rows() == 0) throw DataError("cannot fit normalizer on empty dataset");
  const size_t d = ds.n_features();
  const size_t n = ds.n_rows();
  NormalizerParams params;
  params.method = method;
  params.stats.resize(d);

  for (size_t j = 0; j < d; ++j) {
    if (method == NormMethod::kMinMax) {
      double lo = ds.at(0, j), hi = ds.at(0, j);
      for (size_t i = 1; i < n; ++i) {
        const double v = ds.at(i, j);
        if (v < lo) lo = v;
        if (v > hi) hi = v;
      }
      params.stats[j] = {lo, hi};
    } else {
      double sum = 0.0;
      for (size_t i = 0; i < n; ++i) sum += ds.at(i, j);
      const double mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const double dlt = ds.at(i, j) - mean;
        ss += dlt * dlt;
      }
      params.stats[j] = {mean, std::sqrt(ss / static_cast<double>(n))};
    }
  }
  return params;
}

namespace {

double transform_value(double v, const FeatureStats& st, NormMethod method) {
  if (method == NormMethod::kMinMax) {
    const double range = st.b - st.a;
    if (range == 0.0) return 0.0;
    return (v - st.a) / range;
  }
  if (st.b == 0.0) return 0.0;
  return (v - st.a) / st.b;
}

}  // namespace

void normalize_row(std::span<const double> in, std::span<double> out,
                   const NormalizerParams& params) {
  if (in.size() != params.stats.size() || out.size() != params.stats.size()) {
    throw SchemaError("normalizer expects " + fmt_int(static_cast<long long>(params.stats.size())) +
                      " features, got " + fmt_int(static_cast<long long>(in.size())));
  }
  for (size_t j = 0; j < in.size(); ++j) {
    out[j] = transform_value(in[j], params.stats[j], params.method);
  }
}

std::vector<double> normalize_row(std::span<const double> in, const NormalizerParams& params) {
  std::vector<double> out(in.size());
  normalize_row(in, out, params);
  return out;
}

Dataset apply_normalizer(const Dataset& ds, const NormalizerParams& params) {
  if (params.stats.size() != ds.n_features()) {
    throw SchemaError("normalizer expects " + fmt_int(static_cast<long long>(params.stats.size())) +
                      " features, got " + fmt_int(static_cast<long long>(ds.n_features())));
  }
  const size_t d = ds.n_features();
  std::vector<double> values(ds.values());
  for (size_t i = 0; i < ds.n_rows(); ++i) {
    for (size_t j = 0; j < d; ++j) {
      values[i * d + j] = transform_value(ds.at(i, j), params.stats[j], params.method);
    }
  }
  auto log = ds.preprocessing_log();
  LogStep step{"apply_normalizer", {}};
  step.params.emplace_back("method", std::string(to_string(params.method)));
  step.params.emplace_back("stats", normalizer_stats_to_string(params));
  log.push_back(std::move(step));
  return Dataset(ds.schema(), std::move(values), std::vector<std::uint8_t>(ds.labels()),
                 ds.labeled(), std::move(log));
}

std::string normalizer_stats_to_string(const NormalizerParams& params) {
  std::string out;
  for (size_t j = 0; j < params.stats.size(); ++j) {
    if (j) out.push_back(';');
    out += fmt_double(params.stats[j].a);
    out.push_back(',');
    out += fmt_double(params.stats[j].b);
  }
  return out;
}

NormalizerParams normalizer_params_from_strings(std::string_view method,
                                                std::string_view stats) {
  NormalizerParams params;
  params.method = norm_method_from_string(method);
  size_t pos = 0;
  while (pos <= stats.size() && !stats.empty()) {
    size_t end = stats.find(';', pos);
    if (end == std::string_view::npos) end = stats.size();
    std::string_view pair = stats.substr(pos, end - pos);
    const size_t comma = pair.find(',');
    if (comma == std::string_view::npos) {
      throw ParseError("malformed normalizer stats entry '" + std::string(pair) + "'");
    }
    auto a = parse_double(pair.substr(0, comma));
    auto b = parse_double(pair.substr(comma + 1));
    if (!a || !b) {
      throw ParseError("malformed normalizer stats entry '" + std::string(pair) + "'");
    }
    params.stats.push_back({*a, *b});
    if (end == stats.size()) break;
    pos = end + 1;
  }
  return params;
}

NormalizerParams normalizer_params_from_log(const LogStep& step) {
  const std::string* method = step.find("method");
  const std::string* stats = step.find("stats");
  if (method == nullptr || stats == nullptr) {
    throw ContractError("apply_normalizer step missing method or stats");
  }
  return normalizer_params_from_strings(*method, *stats);
}

}  // namespace flowshap
