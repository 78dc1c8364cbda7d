#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace lfs {

namespace margin {

struct Plain {
    bool operator==(const Plain&) const = default;
};
/// cos(m1 * theta)
struct Angular {
    int m1 = 2;
    bool operator==(const Angular&) const = default;
};
/// cos(theta + m2)
struct AdditiveAngular {
    double m2 = 0.5;
    bool operator==(const AdditiveAngular&) const = default;
};
/// cos(theta) - m3
struct Additive {
    double m3 = 0.35;
    bool operator==(const Additive&) const = default;
};
/// cos(m1 * theta + m2) - m3
struct Combined {
    int m1 = 1;
    double m2 = 0.0;
    double m3 = 0.0;
    bool operator==(const Combined&) const = default;
};
/// -log(h(a, p) * p) with a <= 0; bypasses the margin function.
struct Unified {
    double a = 0.0;
    bool operator==(const Unified&) const = default;
};

} // namespace margin

/// Selects one member of the margin-based softmax family. Constructed only through the
/// validating factories, so every instance satisfies its parameter-range constraints.
class MarginSpec {
public:
    using Variant = std::variant<margin::Plain, margin::Angular, margin::AdditiveAngular, margin::Additive,
                                 margin::Combined, margin::Unified>;

    MarginSpec() = default;

    static MarginSpec plain();
    static MarginSpec angular(int m1);
    static MarginSpec additive_angular(double m2);
    static MarginSpec additive(double m3);
    static MarginSpec combined(int m1, double m2, double m3);
    static MarginSpec unified(double a);

    const Variant& variant() const noexcept { return variant_; }
    bool is_unified() const noexcept { return std::holds_alternative<margin::Unified>(variant_); }

    /// The modulating factor if it does not depend on the sample (Plain, Additive, Unified).
    std::optional<double> constant_factor(double scale) const;

    /// e.g. "plain", "am(m3=0.35)", "unified(a=-10)"
    std::string describe() const;

    bool operator==(const MarginSpec&) const = default;

private:
    explicit MarginSpec(Variant v) : variant_(std::move(v)) {}
    Variant variant_ = margin::Plain{};
};

/// Cosine logits of one sample against K class weights.
struct LogitRow {
    std::span<const double> cosines;
    std::size_t label = 0;
    double scale = 1.0;
};

void validate(const LogitRow& row);

/// Target-class probability carried together with its complement, both obtained in the
/// log domain so that 1 - p keeps full relative precision when p is close to 1.
struct TargetProbability {
    double value = 1.0;
    double complement = 0.0;
    double log_value = 0.0;
    double log_complement = 0.0;
};

/// f(m, theta) for non-unified specs.
double margin_transform(const MarginSpec& spec, double cos_y);
/// df/dcos_y, evaluated at the clamped angle for the angle-based variants.
double margin_transform_derivative(const MarginSpec& spec, double cos_y);

TargetProbability softmax_target(const LogitRow& row);
double softmax_probability(const LogitRow& row);
/// Full softmax vector over the scaled cosines.
std::vector<double> softmax_vector(const LogitRow& row);

TargetProbability margin_target(const MarginSpec& spec, const LogitRow& row);
double margin_probability(const MarginSpec& spec, const LogitRow& row);

/// a = 1 - exp(s * (cos_y - f)). May be positive for Angular margins at large angles;
/// the value is returned as computed.
double modulating_factor(const MarginSpec& spec, double cos_y, double scale);

/// h(a, p) = 1 / (a p + 1 - a). Requires a <= 0.
double modulating_function(double a, double p);
double modulating_function(double a, const TargetProbability& p);

/// h(a, p) * p without the sign check on a, evaluated as p / (1 + (-a)(1 - p)).
double modulated_probability(double a, const TargetProbability& p);

double unified_loss(double a, const LogitRow& row);
std::vector<double> unified_loss_gradient(double a, const LogitRow& row);

double margin_loss(const MarginSpec& spec, const LogitRow& row);
std::vector<double> margin_loss_gradient(const MarginSpec& spec, const LogitRow& row);

/// Loss for any spec with dL/dcos written to `gradient` (size K). Plain routes through the
/// unified path at a = 0 so both report bit-identical values.
double loss_and_gradient(const MarginSpec& spec, const LogitRow& row, std::span<double> gradient);

} // namespace lfs
