#include "onionhash/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "onionhash/error.hpp"

namespace onionhash {

using boost::multiprecision::cpp_int;

std::string_view severity_name(Severity s) {
  switch (s) {
    case Severity::kInfo: return "info";
    case Severity::kWarn: return "warn";
    case Severity::kCritical: return "critical";
  }
  return "unknown";
}

BottleneckReport effective_preimage_space(const ChainSpec& spec,
                                          const AttackLiterature& literature) {
  validate(spec);
  BottleneckReport report;
  for (const auto& stage : spec.stages) {
    report.boundary_widths_bits.push_back(stage_output_bits(stage));
  }
  auto min_it =
      std::min_element(report.boundary_widths_bits.begin(), report.boundary_widths_bits.end());
  report.effective_bits = *min_it;
  report.bottleneck_stage =
      static_cast<std::size_t>(min_it - report.boundary_widths_bits.begin());
  report.nominal_bits = spec.output_width_bits;

  const auto& bottleneck = spec.stages[report.bottleneck_stage];
  if (bottleneck.kind != StageKind::kScrypt) {
    auto alg = stage_algorithm(bottleneck.kind);
    if (auto it = literature.best_known_preimage_bits.find(alg);
        it != literature.best_known_preimage_bits.end()) {
      report.best_known_attack_bits = it->second;
      report.annotation = "best-known " + std::string(algorithm_name(alg)) +
                          " pre-image attack: 2^" + std::to_string(it->second);
    }
  }
  return report;
}

std::vector<ComplianceFinding> compliance_report(const ChainSpec& spec) {
  std::vector<ComplianceFinding> findings;
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    auto alg = stage_algorithm(spec.stages[i].kind);
    if (!is_legacy(alg)) continue;
    if (alg == HashAlgorithm::kMd5) {
      findings.push_back({Severity::kCritical, "DEPRECATED_MD5",
                          "stage " + std::to_string(i) +
                              " uses MD5, which is collision-broken; colliding passwords "
                              "verify as each other",
                          i});
    } else {
      findings.push_back({Severity::kWarn, "DEPRECATED_SHA1",
                          "stage " + std::to_string(i) + " uses deprecated SHA-1", i});
    }
  }
  auto report = effective_preimage_space(spec);
  if (report.effective_bits < 256) {
    findings.push_back({Severity::kWarn, "BOTTLENECK_LT_256",
                        "effective pre-image space is " + std::to_string(report.effective_bits) +
                            " bits, below 256 (nominal " +
                            std::to_string(report.nominal_bits) + ")",
                        report.bottleneck_stage});
  }
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    if (spec.stages[i].kind == StageKind::kScrypt) {
      findings.push_back({Severity::kInfo, "MEMORY_HARD_PRESENT",
                          "stage " + std::to_string(i) + " is memory-hard (scrypt)", i});
      break;
    }
  }
  return findings;
}

PropagationProof collision_propagation_check(const ChainSpec& spec, ByteView a, ByteView b,
                                             const SaltSet& salts, const Pepper& pepper) {
  if (std::equal(a.begin(), a.end(), b.begin(), b.end())) {
    throw Error(Errc::kIdenticalInputs, "collision check needs two distinct inputs");
  }
  auto trace_a = evaluate_chain(spec, a, salts, pepper);
  auto trace_b = evaluate_chain(spec, b, salts, pepper);
  PropagationProof proof{{a.begin(), a.end()}, {b.begin(), b.end()}, {}, {}};
  bool all_equal = true;
  for (std::size_t i = 0; i < trace_a.stages.size(); ++i) {
    bool eq = trace_a.stages[i].bytes == trace_b.stages[i].bytes;
    all_equal = all_equal && eq;
    proof.stages.push_back({std::string(stage_name(trace_a.stages[i].kind)), eq});
  }
  proof.verdict =
      all_equal ? PropagationVerdict::kCollisionPropagates : PropagationVerdict::kNoCollision;
  return proof;
}

Rational exact_rational(double value) {
  if (!std::isfinite(value)) throw Error(Errc::kOutOfRange, "value is not finite");
  int exp = 0;
  double mant = std::frexp(value, &exp);
  auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  exp -= 53;
  Rational r(scaled);
  cpp_int pow2 = cpp_int(1) << std::abs(exp);
  return exp >= 0 ? r * Rational(pow2) : r / Rational(pow2);
}

namespace {

cpp_int pow10(int e) {
  cpp_int r = 1;
  for (int i = 0; i < e; ++i) r *= 10;
  return r;
}

// value * 10^shift as an exact rational.
Rational shift10(const Rational& value, int shift) {
  return shift >= 0 ? value * Rational(pow10(shift)) : value / Rational(pow10(-shift));
}

}  // namespace

std::string render_scientific(const Rational& value, int digits) {
  if (value == 0) return "0e0";
  bool negative = value < 0;
  Rational v = negative ? Rational(-value) : value;

  int e = static_cast<int>(boost::multiprecision::numerator(v).str().size()) -
          static_cast<int>(boost::multiprecision::denominator(v).str().size());
  while (shift10(v, -e) >= 10) ++e;
  while (shift10(v, -e) < 1) --e;

  // mantissa digits as an integer in [10^(digits-1), 10^digits)
  Rational scaled = shift10(v, digits - 1 - e);
  cpp_int whole = boost::multiprecision::numerator(scaled) /
                  boost::multiprecision::denominator(scaled);
  if (scaled - Rational(whole) >= Rational(1, 2)) ++whole;
  if (whole == pow10(digits)) {
    whole = pow10(digits - 1);
    ++e;
  }
  std::string d = whole.str();
  std::string out = negative ? "-" : "";
  out += d.substr(0, 1);
  if (d.size() > 1) out += "." + d.substr(1);
  out += "e" + std::to_string(e);
  return out;
}

CostEstimate guess_cost_estimate(int effective_bits, double guesses_per_second) {
  if (effective_bits < 1 || effective_bits > 512) {
    throw Error(Errc::kOutOfRange, "effective_bits must be in [1, 512]");
  }
  if (!std::isfinite(guesses_per_second) || guesses_per_second <= 0) {
    throw Error(Errc::kOutOfRange, "guesses_per_second must be finite and positive");
  }
  Rational half_space(cpp_int(1) << (effective_bits - 1));
  CostEstimate est{half_space / exact_rational(guesses_per_second), {}};
  est.rendered = render_scientific(est.seconds);
  return est;
}

std::string render_analysis(const ChainSpec& spec, const BottleneckReport& report,
                            const std::vector<ComplianceFinding>& findings,
                            const std::vector<double>& guess_rates) {
  std::ostringstream out;
  out << "chain=" << spec.version << '\n';
  out << "stages=";
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    out << (i ? "," : "") << stage_name(spec.stages[i].kind);
  }
  out << '\n';
  out << "boundary_widths_bits=";
  for (std::size_t i = 0; i < report.boundary_widths_bits.size(); ++i) {
    out << (i ? "," : "") << report.boundary_widths_bits[i];
  }
  out << '\n';
  out << "nominal_bits=" << report.nominal_bits << '\n';
  out << "effective_bits=" << report.effective_bits << '\n';
  out << "bottleneck_stage=" << report.bottleneck_stage << '\n';
  out << "bottleneck_stage_name=" << stage_name(spec.stages[report.bottleneck_stage].kind)
      << '\n';
  out << "best_known_attack_bits="
      << (report.best_known_attack_bits ? std::to_string(*report.best_known_attack_bits) : "none")
      << '\n';
  out << "finding_count=" << findings.size() << '\n';
  for (std::size_t i = 0; i < findings.size(); ++i) {
    const auto& f = findings[i];
    std::string p = "finding." + std::to_string(i) + ".";
    out << p << "severity=" << severity_name(f.severity) << '\n';
    out << p << "code=" << f.code << '\n';
    out << p << "stage=" << (f.stage ? std::to_string(*f.stage) : "chain") << '\n';
    out << p << "message=" << f.message << '\n';
  }
  out << "guess_cost_count=" << guess_rates.size() << '\n';
  for (std::size_t i = 0; i < guess_rates.size(); ++i) {
    std::string p = "guess_cost." + std::to_string(i) + ".";
    out << p << "guesses_per_second=" << render_scientific(exact_rational(guess_rates[i]))
        << '\n';
    out << p << "effective_seconds="
        << guess_cost_estimate(static_cast<int>(report.effective_bits), guess_rates[i]).rendered
        << '\n';
    out << p << "nominal_seconds="
        << guess_cost_estimate(static_cast<int>(report.nominal_bits), guess_rates[i]).rendered
        << '\n';
  }
  return out.str();
}

}  // namespace onionhash
