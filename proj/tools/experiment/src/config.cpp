#include "lfs/experiment/config.hpp"

#include <lfs/error.hpp>

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace lfs::experiment {

using nlohmann::json;

namespace {

// Reads the keys of one JSON object, reporting type errors and unknown keys by dotted name.
class Section {
public:
    Section(const json& node, std::string prefix) : node_(node), prefix_(std::move(prefix))
    {
        if (!node_.is_object()) {
            throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "expected an object");
        }
    }

    template <class T>
    void read(const char* key, T& out)
    {
        seen_.insert(key);
        const auto it = node_.find(key);
        if (it == node_.end()) {
            return;
        }
        try {
            out = convert<T>(*it, key);
        } catch (const json::exception& e) {
            throw ConfigError(name(key), std::string("wrong type (") + e.what() + ")");
        }
    }

    Section child(const char* key)
    {
        seen_.insert(key);
        const auto it = node_.find(key);
        static const json empty = json::object();
        return Section(it == node_.end() ? empty : *it, name(key));
    }

    void finish() const
    {
        for (const auto& [key, value] : node_.items()) {
            if (!seen_.count(key)) {
                throw ConfigError(name(key.c_str()), "unknown key");
            }
        }
    }

private:
    std::string name(const char* key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

    template <class T>
    T convert(const json& v, const char* key) const
    {
        if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
                throw ConfigError(name(key), "expected a non-negative integer");
            }
            return v.get<T>();
        } else if constexpr (std::is_same_v<T, std::optional<std::uint64_t>>) {
            if (v.is_null()) {
                return std::nullopt;
            }
            return convert<std::uint64_t>(v, key);
        } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
            if (!v.is_array()) {
                throw ConfigError(name(key), "expected an array of non-negative integers");
            }
            T out;
            for (const auto& e : v) {
                out.push_back(convert<std::size_t>(e, key));
            }
            return out;
        } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
            return std::filesystem::path(v.get<std::string>());
        } else if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) {
                throw ConfigError(name(key), "expected a number");
            }
            return v.get<double>();
        } else {
            return v.get<T>();
        }
    }

    const json& node_;
    std::string prefix_;
    std::set<std::string> seen_;
};

} // namespace

ExperimentConfig parse_config(const std::string& text, ExperimentConfig c)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<config>", std::string("invalid JSON: ") + e.what());
    }

    Section top(root, "");
    top.read("seed", c.seed);
    top.read("threads", c.threads);
    top.read("out", c.out);

    auto ds = top.child("dataset");
    ds.read("source", c.dataset.source);
    ds.read("path", c.dataset.path);
    ds.read("classes", c.dataset.synthetic.classes);
    ds.read("dim", c.dataset.synthetic.dim);
    ds.read("samples_per_class", c.dataset.synthetic.samples_per_class);
    ds.read("noise_sigma", c.dataset.synthetic.noise_sigma);
    ds.read("seed", c.dataset.seed);
    ds.read("train_frac", c.dataset.train_frac);
    ds.read("val_frac", c.dataset.val_frac);
    ds.read("val_pairs", c.dataset.val_pairs);
    ds.read("test_pairs", c.dataset.test_pairs);
    ds.finish();

    auto model = top.child("model");
    model.read("hidden", c.model.hidden);
    model.read("embedding_dim", c.model.embedding_dim);
    model.read("scale", c.model.scale);
    model.finish();

    auto loss = top.child("loss");
    loss.read("type", c.loss.type);
    loss.read("m1", c.loss.m1);
    loss.read("m2", c.loss.m2);
    loss.read("m3", c.loss.m3);
    loss.read("a", c.loss.a);
    loss.finish();

    auto sgd = top.child("sgd");
    sgd.read("learning_rate", c.sgd.learning_rate);
    sgd.read("momentum", c.sgd.momentum);
    sgd.read("weight_decay", c.sgd.weight_decay);
    sgd.read("batch_size", c.sgd.batch_size);
    sgd.finish();

    auto schedule = top.child("schedule");
    schedule.read("epochs", c.epochs);
    schedule.read("drop_epochs", c.drop_epochs);
    schedule.read("drop_factor", c.drop_factor);
    schedule.finish();

    auto search = top.child("search");
    search.read("mu0", c.search.mu0);
    search.read("sigma", c.search.sigma);
    search.read("eta", c.search.eta);
    search.read("population", c.search.population);
    search.read("score_grad", c.search.score_grad);
    search.read("optimizer", c.search.optimizer);
    search.read("sample_space", c.search.sample_space);
    search.finish();

    auto random = top.child("random");
    random.read("a_min", c.random.a_min);
    random.read("min_magnitude", c.random.min_magnitude);
    random.finish();

    auto eval = top.child("eval");
    eval.read("reward", c.eval.reward);
    eval.read("folds", c.eval.folds);
    eval.read("far", c.eval.far);
    eval.finish();

    auto ablation = top.child("ablation");
    ablation.read("factors", c.ablation_factors);
    ablation.finish();

    top.finish();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("--config", "cannot read " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), std::move(base));
}

std::string dump_config(const ExperimentConfig& c)
{
    json j;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["out"] = c.out.string();
    j["dataset"] = {
        {"source", c.dataset.source},
        {"path", c.dataset.path.string()},
        {"classes", c.dataset.synthetic.classes},
        {"dim", c.dataset.synthetic.dim},
        {"samples_per_class", c.dataset.synthetic.samples_per_class},
        {"noise_sigma", c.dataset.synthetic.noise_sigma},
        {"seed", c.dataset.seed ? json(*c.dataset.seed) : json(nullptr)},
        {"train_frac", c.dataset.train_frac},
        {"val_frac", c.dataset.val_frac},
        {"val_pairs", c.dataset.val_pairs},
        {"test_pairs", c.dataset.test_pairs},
    };
    j["model"] = {{"hidden", c.model.hidden}, {"embedding_dim", c.model.embedding_dim}, {"scale", c.model.scale}};
    j["loss"] = {{"type", c.loss.type}, {"m1", c.loss.m1}, {"m2", c.loss.m2}, {"m3", c.loss.m3}, {"a", c.loss.a}};
    j["sgd"] = {{"learning_rate", c.sgd.learning_rate},
                {"momentum", c.sgd.momentum},
                {"weight_decay", c.sgd.weight_decay},
                {"batch_size", c.sgd.batch_size}};
    j["schedule"] = {{"epochs", c.epochs}, {"drop_epochs", c.drop_epochs}, {"drop_factor", c.drop_factor}};
    j["search"] = {{"mu0", c.search.mu0},
                   {"sigma", c.search.sigma},
                   {"eta", c.search.eta},
                   {"population", c.search.population},
                   {"score_grad", c.search.score_grad},
                   {"optimizer", c.search.optimizer},
                   {"sample_space", c.search.sample_space}};
    j["random"] = {{"a_min", c.random.a_min}, {"min_magnitude", c.random.min_magnitude}};
    j["eval"] = {{"reward", c.eval.reward}, {"folds", c.eval.folds}, {"far", c.eval.far}};
    j["ablation"] = {{"factors", c.ablation_factors}};
    return j.dump(2) + "\n";
}

namespace {

template <class Fn>
void check(const std::string& field, Fn&& fn)
{
    try {
        fn();
    } catch (const ContractError& e) {
        throw ConfigError(field, e.what());
    }
}

void one_of(const std::string& field, const std::string& value, std::initializer_list<const char*> options)
{
    for (const char* o : options) {
        if (value == o) {
            return;
        }
    }
    std::string list;
    for (const char* o : options) {
        list += list.empty() ? o : std::string("|") + o;
    }
    throw ConfigError(field, "'" + value + "' is not one of " + list);
}

} // namespace

void validate(const ExperimentConfig& c)
{
    one_of("dataset.source", c.dataset.source, {"synthetic", "csv"});
    if (c.dataset.source == "csv" && c.dataset.path.empty()) {
        throw ConfigError("dataset.path", "required when dataset.source is csv (use --dataset PATH)");
    }
    if (c.dataset.synthetic.classes < 2) {
        throw ConfigError("dataset.classes", "must be >= 2");
    }
    if (c.dataset.synthetic.dim < 1) {
        throw ConfigError("dataset.dim", "must be >= 1");
    }
    if (c.dataset.synthetic.samples_per_class < 2) {
        throw ConfigError("dataset.samples_per_class", "must be >= 2");
    }
    if (!(c.dataset.synthetic.noise_sigma > 0.0)) {
        throw ConfigError("dataset.noise_sigma", "must be > 0");
    }
    if (!(c.dataset.train_frac > 0.0 && c.dataset.train_frac < 1.0)) {
        throw ConfigError("dataset.train_frac", "must lie in (0, 1)");
    }
    if (!(c.dataset.val_frac > 0.0 && c.dataset.val_frac < 1.0)) {
        throw ConfigError("dataset.val_frac", "must lie in (0, 1)");
    }
    if (c.dataset.val_pairs == 0 || c.dataset.val_pairs % 2 != 0) {
        throw ConfigError("dataset.val_pairs", "must be positive and even");
    }
    if (c.dataset.test_pairs == 0 || c.dataset.test_pairs % 2 != 0) {
        throw ConfigError("dataset.test_pairs", "must be positive and even");
    }
    check("model", [&] { c.model.validate(); });
    one_of("loss.type", c.loss.type, {"plain", "sphere", "arc", "am", "combined", "unified"});
    check("loss", [&] { make_loss(c.loss); });
    check("sgd", [&] { c.sgd.validate(); });
    if (!(c.drop_factor > 1.0)) {
        throw ConfigError("schedule.drop_factor", "must be > 1");
    }
    if (!std::is_sorted(c.drop_epochs.begin(), c.drop_epochs.end())) {
        throw ConfigError("schedule.drop_epochs", "must be sorted");
    }
    check("search", [&] { SearchDistribution{c.search.mu0, c.search.sigma, c.search.eta, c.search.population}.validate(); });
    one_of("search.score_grad", c.search.score_grad, {"mu", "a"});
    one_of("search.optimizer", c.search.optimizer, {"plain", "adam"});
    one_of("search.sample_space", c.search.sample_space, {"direct", "negexp"});
    if (!(c.random.a_min <= 0.0)) {
        throw ConfigError("random.a_min", "must be <= 0");
    }
    if (!(c.random.min_magnitude > 0.0)) {
        throw ConfigError("random.min_magnitude", "must be > 0");
    }
    one_of("eval.reward", c.eval.reward, {"verification", "identification"});
    if (c.eval.folds < 2) {
        throw ConfigError("eval.folds", "must be >= 2");
    }
    for (double far : c.eval.far) {
        if (!(far > 0.0 && far <= 1.0)) {
            throw ConfigError("eval.far", "every FAR must lie in (0, 1]");
        }
    }
    for (double a : c.ablation_factors) {
        if (!(a <= 0.0)) {
            throw ConfigError("ablation.factors", "every factor must be <= 0");
        }
    }
}

MarginSpec make_loss(const LossConfig& loss)
{
    if (loss.type == "plain") {
        return MarginSpec::plain();
    }
    if (loss.type == "sphere") {
        return MarginSpec::angular(loss.m1);
    }
    if (loss.type == "arc") {
        return MarginSpec::additive_angular(loss.m2);
    }
    if (loss.type == "am") {
        return MarginSpec::additive(loss.m3);
    }
    if (loss.type == "combined") {
        return MarginSpec::combined(loss.m1, loss.m2, loss.m3);
    }
    if (loss.type == "unified") {
        return MarginSpec::unified(loss.a);
    }
    throw ConfigError("loss.type", "unknown loss '" + loss.type + "'");
}

TrainingConfig make_training(const ExperimentConfig& c)
{
    TrainingConfig t;
    t.model = c.model;
    t.sgd = c.sgd;
    t.schedule = {c.sgd.learning_rate, c.drop_epochs, c.drop_factor};
    t.epochs = c.epochs;
    t.threads = c.threads;
    return t;
}

SearchConfig make_search(const ExperimentConfig& c)
{
    SearchConfig s;
    s.training = make_training(c);
    s.distribution = {c.search.mu0, c.search.sigma, c.search.eta, c.search.population};
    s.score_gradient = c.search.score_grad == "a" ? ScoreGradient::A : ScoreGradient::Mu;
    s.optimizer = c.search.optimizer == "adam" ? OuterOptimizer::Adam : OuterOptimizer::Plain;
    s.sample_space = c.search.sample_space == "negexp" ? SampleSpace::NegExp : SampleSpace::Direct;
    return s;
}

RandomScheduleConfig make_random(const ExperimentConfig& c)
{
    return {make_training(c), c.random.a_min, c.random.min_magnitude};
}

RewardKind make_reward_kind(const EvalSettings& eval)
{
    return eval.reward == "identification" ? RewardKind::Identification : RewardKind::Verification;
}

} // namespace lfs::experiment
