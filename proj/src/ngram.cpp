#include "tabsynth/ngram.hpp"

#include <algorithm>
#include <istream>

#include "tabsynth/checkpoint.hpp"
#include "tabsynth/error.hpp"

namespace tabsynth {

namespace {

class NgramDecoder final : public Decoder {
public:
    explicit NgramDecoder(const NgramModel& model) : model_(model) {}

    void push(TokenId token) override {
        context_.push_back(token);
        const auto keep = static_cast<std::size_t>(std::max(model_.config().order - 1, 0));
        if (context_.size() > keep) {
            context_.erase(context_.begin(), context_.end() - static_cast<std::ptrdiff_t>(keep));
        }
    }

    std::vector<double> distribution() override { return model_.next_distribution(context_); }

private:
    const NgramModel& model_;
    std::vector<TokenId> context_;
};

}  // namespace

NgramModel::NgramModel(Vocabulary vocabulary, NgramConfig config)
    : vocab_(std::move(vocabulary)), config_(config) {
    if (config_.order < 1) {
        throw Error(ErrorKind::config, "n-gram order must be at least 1");
    }
    if (!(config_.addK > 0.0)) {
        throw Error(ErrorKind::config, "add-k constant must be positive");
    }
    if (!(config_.finetuneWeight > 0.0)) {
        throw Error(ErrorKind::config, "fine-tune weight must be positive");
    }
    levels_.resize(static_cast<std::size_t>(config_.order));
}

const NgramModel::ContextCounts* NgramModel::lookup(std::span<const TokenId> context) const {
    if (context.size() >= levels_.size()) {
        return nullptr;
    }
    const Level& level = levels_[context.size()];
    auto it = level.find(std::vector<TokenId>(context.begin(), context.end()));
    if (it == level.end() || !(it->second.total > 0.0)) {
        return nullptr;
    }
    return &it->second;
}

std::vector<double> NgramModel::next_distribution(std::span<const TokenId> context) const {
    const std::size_t vocabSize = vocab_.size();
    const std::size_t maxLen = std::min(context.size(), levels_.size() - 1);
    for (std::size_t len = maxLen + 1; len-- > 0;) {
        const ContextCounts* counts = lookup(context.subspan(context.size() - len, len));
        if (counts == nullptr) {
            continue;
        }
        const double k = config_.addK;
        const double denom = counts->total + k * static_cast<double>(vocabSize);
        std::vector<double> dist(vocabSize, k / denom);
        for (const auto& [token, c] : counts->next) {
            if (token < vocabSize) {
                dist[token] = (c + k) / denom;
            }
        }
        return dist;
    }
    return std::vector<double>(vocabSize, 1.0 / static_cast<double>(vocabSize));
}

std::unique_ptr<Decoder> NgramModel::start() const {
    return std::make_unique<NgramDecoder>(*this);
}

void NgramModel::accumulate(const Corpus& corpus, double weight) {
    check_corpus(corpus, vocab_.size());
    for (const auto& seq : corpus.sequences) {
        for (std::size_t i = 1; i < seq.size(); ++i) {
            const std::size_t maxLen = std::min(i, levels_.size() - 1);
            for (std::size_t len = 0; len <= maxLen; ++len) {
                std::vector<TokenId> ctx(seq.begin() + static_cast<std::ptrdiff_t>(i - len),
                                         seq.begin() + static_cast<std::ptrdiff_t>(i));
                ContextCounts& counts = levels_[len][std::move(ctx)];
                counts.total += weight;
                counts.next[seq[i]] += weight;
            }
        }
    }
}

std::vector<double> NgramModel::pretrain(const Corpus& corpus, int /*epochs*/, std::uint64_t /*seed*/) {
    accumulate(corpus, 1.0);
    return {};
}

void NgramModel::finetune(const Corpus& downstream, int steps, std::uint64_t /*seed*/) {
    if (steps <= 0) {
        return;
    }
    accumulate(downstream, config_.finetuneWeight);
}

double NgramModel::count(std::span<const TokenId> context, TokenId token) const {
    if (context.size() >= levels_.size()) {
        return 0.0;
    }
    auto it = levels_[context.size()].find(std::vector<TokenId>(context.begin(), context.end()));
    if (it == levels_[context.size()].end()) {
        return 0.0;
    }
    auto jt = it->second.next.find(token);
    return jt == it->second.next.end() ? 0.0 : jt->second;
}

double NgramModel::context_count(std::span<const TokenId> context) const {
    if (context.size() >= levels_.size()) {
        return 0.0;
    }
    auto it = levels_[context.size()].find(std::vector<TokenId>(context.begin(), context.end()));
    return it == levels_[context.size()].end() ? 0.0 : it->second.total;
}

nlohmann::json NgramModel::describe() const {
    return {{"order", config_.order}, {"add_k", config_.addK}, {"finetune_weight", config_.finetuneWeight}};
}

void NgramModel::write_state(std::ostream& out) const {
    BinaryWriter w(out);
    w.u64(levels_.size());
    for (const auto& level : levels_) {
        w.u64(level.size());
        for (const auto& [ctx, counts] : level) {
            w.u32_array(ctx);
            w.f64(counts.total);
            std::vector<std::uint32_t> ids;
            std::vector<double> values;
            ids.reserve(counts.next.size());
            values.reserve(counts.next.size());
            for (const auto& [token, c] : counts.next) {
                ids.push_back(token);
                values.push_back(c);
            }
            w.u32_array(ids);
            w.f64_array(values);
        }
    }
}

std::unique_ptr<NgramModel> NgramModel::read(const nlohmann::json& header, std::istream& in) {
    const auto& cfgJson = header.at("config");
    NgramConfig cfg;
    cfg.order = cfgJson.at("order").get<int>();
    cfg.addK = cfgJson.at("add_k").get<double>();
    cfg.finetuneWeight = cfgJson.at("finetune_weight").get<double>();
    Vocabulary vocab(header.at("vocabulary").get<std::vector<std::string>>());
    auto model = std::make_unique<NgramModel>(std::move(vocab), cfg);

    BinaryReader r(in);
    const std::uint64_t levels = r.u64();
    if (levels != model->levels_.size()) {
        throw Error(ErrorKind::data, "checkpoint level count does not match n-gram order");
    }
    for (auto& level : model->levels_) {
        const std::uint64_t contexts = r.u64();
        for (std::uint64_t c = 0; c < contexts; ++c) {
            auto ctx = r.u32_array();
            ContextCounts counts;
            counts.total = r.f64();
            auto ids = r.u32_array();
            auto values = r.f64_array();
            if (ids.size() != values.size()) {
                throw Error(ErrorKind::data, "corrupt n-gram checkpoint");
            }
            for (std::size_t i = 0; i < ids.size(); ++i) {
                counts.next.emplace(ids[i], values[i]);
            }
            level.emplace(std::move(ctx), std::move(counts));
        }
    }
    return model;
}

}  // namespace tabsynth
