#include "tabsynth/backend.hpp"

#include <cmath>

#include "tabsynth/error.hpp"

namespace tabsynth {

namespace {

class ReplayDecoder final : public Decoder {
public:
    explicit ReplayDecoder(const GenerativeBackend& backend) : backend_(backend) {}

    void push(TokenId token) override { context_.push_back(token); }

    std::vector<double> distribution() override { return backend_.next_distribution(context_); }

private:
    const GenerativeBackend& backend_;
    TokenSequence context_;
};

}  // namespace

void Corpus::append(const Corpus& other) {
    sequences.insert(sequences.end(), other.sequences.begin(), other.sequences.end());
    provenance.insert(provenance.end(), other.provenance.begin(), other.provenance.end());
}

std::unique_ptr<Decoder> GenerativeBackend::start() const {
    return std::make_unique<ReplayDecoder>(*this);
}

double sequence_logprob(const GenerativeBackend& backend, std::span<const TokenId> sequence) {
    double total = 0.0;
    auto decoder = backend.start();
    for (std::size_t k = 0; k < sequence.size(); ++k) {
        if (k > 0) {
            const auto dist = decoder->distribution();
            total += std::log(dist.at(sequence[k]));
        }
        decoder->push(sequence[k]);
    }
    return total;
}

Corpus make_corpus(GenerativeBackend& backend, const std::vector<std::string>& sentences,
                   std::string_view separator, const std::string& sourceId) {
    Corpus corpus;
    corpus.sequences.reserve(sentences.size());
    for (const auto& s : sentences) {
        TokenSequence seq;
        seq.push_back(special::bosId);
        for (const auto& t : tokenize(s, separator)) {
            seq.push_back(backend.intern(t));
        }
        seq.push_back(special::eosId);
        corpus.sequences.push_back(std::move(seq));
        corpus.provenance.push_back(sourceId);
    }
    return corpus;
}

void check_corpus(const Corpus& corpus, std::size_t vocabularySize) {
    if (corpus.empty()) {
        throw Error(ErrorKind::data, "training corpus is empty");
    }
    for (std::size_t i = 0; i < corpus.sequences.size(); ++i) {
        const auto& seq = corpus.sequences[i];
        if (seq.size() < 2) {
            throw Error(ErrorKind::data, "corpus sequence " + std::to_string(i) + " has fewer than two tokens");
        }
        for (TokenId id : seq) {
            if (id >= vocabularySize) {
                throw Error(ErrorKind::data, "corpus sequence " + std::to_string(i) + " contains token id " +
                                                 std::to_string(id) + " outside a vocabulary of " +
                                                 std::to_string(vocabularySize));
            }
        }
    }
}

std::vector<double> pretrain(GenerativeBackend& backend, const Corpus& corpus, int epochs, std::uint64_t seed) {
    return backend.pretrain(corpus, epochs, seed);
}

void finetune(GenerativeBackend& backend, const Corpus& downstream, int steps, std::uint64_t seed) {
    backend.finetune(downstream, steps, seed);
}

}  // namespace tabsynth
