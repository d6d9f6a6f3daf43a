#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "onionhash/chain.hpp"

namespace onionhash {

using Rational = boost::multiprecision::cpp_rational;

/// Best-known pre-image attack costs, carried next to the structural width
/// as metadata. The structural figure is what the analysis computes.
struct AttackLiterature {
  std::map<HashAlgorithm, std::size_t> best_known_preimage_bits = {{HashAlgorithm::kMd5, 123}};
};

struct BottleneckReport {
  std::vector<std::size_t> boundary_widths_bits;  // output width after each stage
  std::size_t effective_bits = 0;
  std::size_t bottleneck_stage = 0;
  std::size_t nominal_bits = 0;
  std::optional<std::size_t> best_known_attack_bits;
  std::string annotation;
};

// Salts and pepper add nothing: they are public or fixed per verification.
BottleneckReport effective_preimage_space(const ChainSpec& spec,
                                          const AttackLiterature& literature = {});

enum class Severity { kInfo, kWarn, kCritical };

std::string_view severity_name(Severity s);

struct ComplianceFinding {
  Severity severity = Severity::kInfo;
  std::string code;
  std::string message;
  std::optional<std::size_t> stage;  // nullopt: applies to the whole chain
};

std::vector<ComplianceFinding> compliance_report(const ChainSpec& spec);

enum class PropagationVerdict { kCollisionPropagates, kNoCollision };

struct StageEquality {
  std::string stage;
  bool equal = false;
};

struct PropagationProof {
  Bytes input_a;
  Bytes input_b;
  std::vector<StageEquality> stages;
  PropagationVerdict verdict = PropagationVerdict::kNoCollision;
};

// Evaluates both inputs under the same salts and pepper. Throws
// Error{kIdenticalInputs} when a == b.
PropagationProof collision_propagation_check(const ChainSpec& spec, ByteView a, ByteView b,
                                             const SaltSet& salts, const Pepper& pepper);

struct CostEstimate {
  Rational seconds;      // exact 2^(bits-1) / rate
  std::string rendered;  // 5 significant digits, e.g. "1.7014e29"
};

// Expected exhaustive-search time: half the space at the given rate.
// Throws Error{kOutOfRange} unless 1 <= effective_bits <= 512 and the rate
// is finite and positive.
CostEstimate guess_cost_estimate(int effective_bits, double guesses_per_second);

// Exact value of a finite double.
Rational exact_rational(double value);

// Scientific notation with `digits` significant digits, round half up.
std::string render_scientific(const Rational& value, int digits = 5);

/// Key-value analysis document with a fixed field order, one `key=value`
/// per line. Consumed by `onionhash analyze --format=structured`.
std::string render_analysis(const ChainSpec& spec, const BottleneckReport& report,
                            const std::vector<ComplianceFinding>& findings,
                            const std::vector<double>& guess_rates);

}  // namespace onionhash
