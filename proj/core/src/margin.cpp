#include "lfs/margin.hpp"

#include "lfs/error.hpp"
#include "lfs/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace lfs {

namespace {

std::string shortest(double v)
{
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Target-class probability when the target logit is `target_logit` and every other class k
// contributes s * cos_k. Both p and 1 - p come from partial sums of max-shifted exponentials.
TargetProbability target_probability(const LogitRow& row, double target_logit)
{
    double peak = target_logit;
    std::size_t peak_index = row.label;
    for (std::size_t k = 0; k < row.cosines.size(); ++k) {
        if (k != row.label && row.scale * row.cosines[k] > peak) {
            peak = row.scale * row.cosines[k];
            peak_index = k;
        }
    }
    const double target_term = std::exp(target_logit - peak);
    double other_terms = 0.0;
    double rest = peak_index == row.label ? 0.0 : target_term; // every term except the peak's 1
    for (std::size_t k = 0; k < row.cosines.size(); ++k) {
        if (k != row.label) {
            const double term = std::exp(row.scale * row.cosines[k] - peak);
            other_terms += term;
            if (k != peak_index) {
                rest += term;
            }
        }
    }
    const double log_total = std::log1p(rest);

    TargetProbability out;
    out.log_value = (target_logit - peak) - log_total;
    out.value = std::exp(out.log_value);
    if (other_terms > 0.0) {
        out.log_complement = std::log(other_terms) - log_total;
        out.complement = std::exp(out.log_complement);
    } else {
        out.log_complement = -std::numeric_limits<double>::infinity();
        out.complement = 0.0;
    }
    return out;
}

// log(1 + exp(t)) without overflow.
double softplus(double t)
{
    if (t > 30.0) {
        return t + std::log1p(std::exp(-t));
    }
    return std::log1p(std::exp(t));
}

// log(a p + 1 - a) = log(1 + (-a) q), a <= 0.
double log_modulation_denominator(double a, const TargetProbability& p)
{
    return softplus(std::log(-a) + p.log_complement);
}

const margin::Unified* as_unified(const MarginSpec& spec)
{
    return std::get_if<margin::Unified>(&spec.variant());
}

void require_not_unified(const MarginSpec& spec, const char* what)
{
    if (spec.is_unified()) {
        throw ContractError(std::string(what) + ": Unified spec has no margin function");
    }
}

void require_factor(double a, const char* what)
{
    if (!(a <= 0.0)) {
        throw ContractError(std::string(what) + ": modulating factor must satisfy a <= 0, got " + shortest(a));
    }
}

} // namespace

MarginSpec MarginSpec::plain()
{
    return MarginSpec(margin::Plain{});
}

MarginSpec MarginSpec::angular(int m1)
{
    require(m1 >= 1, "Angular margin: m1 must be an integer >= 1");
    return MarginSpec(margin::Angular{m1});
}

MarginSpec MarginSpec::additive_angular(double m2)
{
    require(m2 > 0.0 && std::isfinite(m2), "AdditiveAngular margin: m2 must be > 0");
    return MarginSpec(margin::AdditiveAngular{m2});
}

MarginSpec MarginSpec::additive(double m3)
{
    require(m3 > 0.0 && std::isfinite(m3), "Additive margin: m3 must be > 0");
    return MarginSpec(margin::Additive{m3});
}

MarginSpec MarginSpec::combined(int m1, double m2, double m3)
{
    require(m1 >= 1, "Combined margin: m1 must be an integer >= 1");
    require(m2 >= 0.0 && std::isfinite(m2), "Combined margin: m2 must be >= 0");
    require(m3 >= 0.0 && std::isfinite(m3), "Combined margin: m3 must be >= 0");
    return MarginSpec(margin::Combined{m1, m2, m3});
}

MarginSpec MarginSpec::unified(double a)
{
    require_factor(a, "Unified margin");
    return MarginSpec(margin::Unified{a});
}

std::optional<double> MarginSpec::constant_factor(double scale) const
{
    return std::visit(Overloaded{
                          [](const margin::Plain&) -> std::optional<double> { return 0.0; },
                          [&](const margin::Additive& m) -> std::optional<double> { return -std::expm1(scale * m.m3); },
                          [](const margin::Unified& m) -> std::optional<double> { return m.a; },
                          [](const auto&) -> std::optional<double> { return std::nullopt; },
                      },
                      variant_);
}

std::string MarginSpec::describe() const
{
    return std::visit(Overloaded{
                          [](const margin::Plain&) { return std::string("plain"); },
                          [](const margin::Angular& m) { return "sphere(m1=" + std::to_string(m.m1) + ")"; },
                          [](const margin::AdditiveAngular& m) { return "arc(m2=" + shortest(m.m2) + ")"; },
                          [](const margin::Additive& m) { return "am(m3=" + shortest(m.m3) + ")"; },
                          [](const margin::Combined& m) {
                              return "combined(m1=" + std::to_string(m.m1) + ",m2=" + shortest(m.m2) +
                                     ",m3=" + shortest(m.m3) + ")";
                          },
                          [](const margin::Unified& m) { return "unified(a=" + shortest(m.a) + ")"; },
                      },
                      variant_);
}

void validate(const LogitRow& row)
{
    require(!row.cosines.empty(), "LogitRow: no classes");
    require(row.label < row.cosines.size(), "LogitRow: label out of range");
    require(row.scale > 0.0, "LogitRow: scale must be positive");
    for (double c : row.cosines) {
        require(c >= -1.0 && c <= 1.0, "LogitRow: cosine outside [-1, 1]");
    }
}

double margin_transform(const MarginSpec& spec, double cos_y)
{
    require_not_unified(spec, "margin_transform");
    return std::visit(Overloaded{
                          [&](const margin::Plain&) { return cos_y; },
                          [&](const margin::Additive& m) { return cos_y - m.m3; },
                          [&](const margin::Angular& m) { return std::cos(m.m1 * clamped_acos(cos_y)); },
                          [&](const margin::AdditiveAngular& m) { return std::cos(clamped_acos(cos_y) + m.m2); },
                          [&](const margin::Combined& m) {
                              return std::cos(m.m1 * clamped_acos(cos_y) + m.m2) - m.m3;
                          },
                          [](const margin::Unified&) { return 0.0; },
                      },
                      spec.variant());
}

double margin_transform_derivative(const MarginSpec& spec, double cos_y)
{
    require_not_unified(spec, "margin_transform_derivative");
    // d cos(g(theta)) / d cos(theta) = g'(theta) sin(g(theta)) / sin(theta)
    return std::visit(Overloaded{
                          [](const margin::Plain&) { return 1.0; },
                          [](const margin::Additive&) { return 1.0; },
                          [&](const margin::Angular& m) {
                              const double theta = clamped_acos(cos_y);
                              return m.m1 * std::sin(m.m1 * theta) / std::sin(theta);
                          },
                          [&](const margin::AdditiveAngular& m) {
                              const double theta = clamped_acos(cos_y);
                              return std::sin(theta + m.m2) / std::sin(theta);
                          },
                          [&](const margin::Combined& m) {
                              const double theta = clamped_acos(cos_y);
                              return m.m1 * std::sin(m.m1 * theta + m.m2) / std::sin(theta);
                          },
                          [](const margin::Unified&) { return 0.0; },
                      },
                      spec.variant());
}

TargetProbability softmax_target(const LogitRow& row)
{
    validate(row);
    return target_probability(row, row.scale * row.cosines[row.label]);
}

double softmax_probability(const LogitRow& row)
{
    return softmax_target(row).value;
}

std::vector<double> softmax_vector(const LogitRow& row)
{
    validate(row);
    std::vector<double> logits(row.cosines.size());
    for (std::size_t k = 0; k < logits.size(); ++k) {
        logits[k] = row.scale * row.cosines[k];
    }
    const double lse = log_sum_exp(logits);
    for (double& z : logits) {
        z = std::exp(z - lse);
    }
    return logits;
}

TargetProbability margin_target(const MarginSpec& spec, const LogitRow& row)
{
    validate(row);
    const double f = margin_transform(spec, row.cosines[row.label]);
    return target_probability(row, row.scale * f);
}

double margin_probability(const MarginSpec& spec, const LogitRow& row)
{
    return margin_target(spec, row).value;
}

double modulating_factor(const MarginSpec& spec, double cos_y, double scale)
{
    require_not_unified(spec, "modulating_factor");
    if (std::holds_alternative<margin::Plain>(spec.variant())) {
        return 0.0;
    }
    return -std::expm1(scale * (cos_y - margin_transform(spec, cos_y)));
}

double modulating_function(double a, double p)
{
    require_factor(a, "modulating_function");
    require(p >= 0.0 && p <= 1.0, "modulating_function: p must lie in [0, 1]");
    return 1.0 / (1.0 + (-a) * (1.0 - p));
}

double modulating_function(double a, const TargetProbability& p)
{
    require_factor(a, "modulating_function");
    return 1.0 / (1.0 + (-a) * p.complement);
}

double modulated_probability(double a, const TargetProbability& p)
{
    return p.value / (1.0 + (-a) * p.complement);
}

double unified_loss(double a, const LogitRow& row)
{
    require_factor(a, "unified_loss");
    const auto p = softmax_target(row);
    return -p.log_value + log_modulation_denominator(a, p);
}

namespace {

// dL/dcos_k = s (1 - a) / (1 + (-a) q) * (p_k - [k == y])
double unified_gradient_into(double a, const LogitRow& row, std::span<double> gradient)
{
    const auto target = softmax_target(row);
    const double loss = -target.log_value + log_modulation_denominator(a, target);

    std::vector<double> logits(row.cosines.size());
    for (std::size_t k = 0; k < logits.size(); ++k) {
        logits[k] = row.scale * row.cosines[k];
    }
    const double lse = log_sum_exp(logits);
    const double weight = row.scale * (1.0 - a) / (1.0 + (-a) * target.complement);
    for (std::size_t k = 0; k < logits.size(); ++k) {
        const double residual = k == row.label ? -target.complement : std::exp(logits[k] - lse);
        gradient[k] = weight * residual;
    }
    return loss;
}

double margin_gradient_into(const MarginSpec& spec, const LogitRow& row, std::span<double> gradient)
{
    const double cos_y = row.cosines[row.label];
    const double f = margin_transform(spec, cos_y);
    const auto target = target_probability(row, row.scale * f);

    std::vector<double> logits(row.cosines.size());
    for (std::size_t k = 0; k < logits.size(); ++k) {
        logits[k] = k == row.label ? row.scale * f : row.scale * row.cosines[k];
    }
    const double lse = log_sum_exp(logits);
    for (std::size_t k = 0; k < logits.size(); ++k) {
        gradient[k] = k == row.label ? -row.scale * target.complement * margin_transform_derivative(spec, cos_y)
                                     : row.scale * std::exp(logits[k] - lse);
    }
    return -target.log_value;
}

} // namespace

std::vector<double> unified_loss_gradient(double a, const LogitRow& row)
{
    require_factor(a, "unified_loss_gradient");
    validate(row);
    std::vector<double> gradient(row.cosines.size());
    unified_gradient_into(a, row, gradient);
    return gradient;
}

double margin_loss(const MarginSpec& spec, const LogitRow& row)
{
    require_not_unified(spec, "margin_loss");
    return -margin_target(spec, row).log_value;
}

std::vector<double> margin_loss_gradient(const MarginSpec& spec, const LogitRow& row)
{
    require_not_unified(spec, "margin_loss_gradient");
    validate(row);
    std::vector<double> gradient(row.cosines.size());
    margin_gradient_into(spec, row, gradient);
    return gradient;
}

double loss_and_gradient(const MarginSpec& spec, const LogitRow& row, std::span<double> gradient)
{
    validate(row);
    require(gradient.size() == row.cosines.size(), "loss_and_gradient: gradient size must equal K");
    if (const auto* u = as_unified(spec)) {
        return unified_gradient_into(u->a, row, gradient);
    }
    if (std::holds_alternative<margin::Plain>(spec.variant())) {
        return unified_gradient_into(0.0, row, gradient);
    }
    return margin_gradient_into(spec, row, gradient);
}

} // namespace lfs
