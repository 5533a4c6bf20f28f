#include "tabsynth/neural.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>

#include "tabsynth/checkpoint.hpp"
#include "tabsynth/error.hpp"
#include "tabsynth/random.hpp"

namespace tabsynth {

namespace {

constexpr double kNormEpsilon = 1e-5;

// out[j] = sum_i in[i] * W[i * nout + j]
void matvec(const double* in, const double* w, std::size_t nin, std::size_t nout, double* out) {
    std::fill(out, out + nout, 0.0);
    for (std::size_t i = 0; i < nin; ++i) {
        const double a = in[i];
        const double* row = w + i * nout;
        for (std::size_t j = 0; j < nout; ++j) {
            out[j] += a * row[j];
        }
    }
}

// Backward of matvec: din += W dout, dW += in (x) dout.
void matvec_backward(const double* in, const double* w, const double* dout, std::size_t nin, std::size_t nout,
                     double* din, double* dw) {
    for (std::size_t i = 0; i < nin; ++i) {
        const double* row = w + i * nout;
        double* drow = dw + i * nout;
        double acc = 0.0;
        const double a = in[i];
        for (std::size_t j = 0; j < nout; ++j) {
            acc += dout[j] * row[j];
            drow[j] += a * dout[j];
        }
        din[i] += acc;
    }
}

double rms_forward(const double* x, const double* gain, std::size_t d, double* out) {
    double ms = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        ms += x[i] * x[i];
    }
    const double r = std::sqrt(ms / static_cast<double>(d) + kNormEpsilon);
    for (std::size_t i = 0; i < d; ++i) {
        out[i] = x[i] / r * gain[i];
    }
    return r;
}

void rms_backward(const double* x, double r, const double* gain, const double* dout, std::size_t d, double* dx,
                  double* dgain) {
    double dot = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double xhat = x[i] / r;
        dgain[i] += dout[i] * xhat;
        dot += dout[i] * gain[i] * xhat;
    }
    dot /= static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double xhat = x[i] / r;
        dx[i] += (dout[i] * gain[i] - xhat * dot) / r;
    }
}

double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

void softmax_inplace(std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : v) {
        x /= sum;
    }
}

// Activations of one sequence, appended position by position. Keys and
// values double as the decoding cache.
struct LayerTrace {
    std::vector<double> xIn, n1, q, k, v, o, xMid, n2, u, z;
    std::vector<double> r1, r2;
    std::vector<std::vector<double>> att;
};

struct Trace {
    std::size_t length = 0;
    std::vector<TokenId> tokens;
    std::vector<LayerTrace> layers;
    std::vector<double> xOut, nf, rf;
    std::vector<double> probs;  // distribution at the last position
    std::vector<std::vector<double>> allProbs;
};

struct Dims {
    std::size_t d, h, vocab, context;
};

// Runs one more position through the network.
void forward_position(const std::vector<double>& p, const TinyNeuralLM::Layout& lay, const Dims& dims, Trace& tr,
                      TokenId token, bool keepAllProbs) {
    const std::size_t d = dims.d;
    const std::size_t h = dims.h;
    const std::size_t t = tr.length;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    if (tr.layers.size() != lay.layers.size()) {
        tr.layers.resize(lay.layers.size());
    }
    std::vector<double> x(d);
    const double* tok = p.data() + lay.tokenEmbedding + static_cast<std::size_t>(token) * d;
    const double* pos = p.data() + lay.positionEmbedding + t * d;
    for (std::size_t i = 0; i < d; ++i) {
        x[i] = tok[i] + pos[i];
    }
    std::vector<double> tmp(std::max(d, h));
    for (std::size_t l = 0; l < lay.layers.size(); ++l) {
        const auto& off = lay.layers[l];
        LayerTrace& L = tr.layers[l];
        L.xIn.insert(L.xIn.end(), x.begin(), x.end());

        std::vector<double> n1(d);
        L.r1.push_back(rms_forward(x.data(), p.data() + off.norm1, d, n1.data()));
        L.n1.insert(L.n1.end(), n1.begin(), n1.end());

        std::vector<double> q(d), k(d), v(d);
        matvec(n1.data(), p.data() + off.wq, d, d, q.data());
        matvec(n1.data(), p.data() + off.wk, d, d, k.data());
        matvec(n1.data(), p.data() + off.wv, d, d, v.data());
        L.q.insert(L.q.end(), q.begin(), q.end());
        L.k.insert(L.k.end(), k.begin(), k.end());
        L.v.insert(L.v.end(), v.begin(), v.end());

        std::vector<double> att(t + 1);
        for (std::size_t u = 0; u <= t; ++u) {
            const double* ku = L.k.data() + u * d;
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                s += q[i] * ku[i];
            }
            att[u] = s * scale;
        }
        softmax_inplace(att);
        std::vector<double> o(d, 0.0);
        for (std::size_t u = 0; u <= t; ++u) {
            const double* vu = L.v.data() + u * d;
            for (std::size_t i = 0; i < d; ++i) {
                o[i] += att[u] * vu[i];
            }
        }
        L.att.push_back(std::move(att));
        L.o.insert(L.o.end(), o.begin(), o.end());

        matvec(o.data(), p.data() + off.wo, d, d, tmp.data());
        for (std::size_t i = 0; i < d; ++i) {
            x[i] += tmp[i];
        }
        L.xMid.insert(L.xMid.end(), x.begin(), x.end());

        std::vector<double> n2(d);
        L.r2.push_back(rms_forward(x.data(), p.data() + off.norm2, d, n2.data()));
        L.n2.insert(L.n2.end(), n2.begin(), n2.end());

        std::vector<double> u(h), z(h);
        matvec(n2.data(), p.data() + off.w1, d, h, u.data());
        for (std::size_t j = 0; j < h; ++j) {
            z[j] = u[j] * sigmoid(u[j]);
        }
        L.u.insert(L.u.end(), u.begin(), u.end());
        L.z.insert(L.z.end(), z.begin(), z.end());
        matvec(z.data(), p.data() + off.w2, h, d, tmp.data());
        for (std::size_t i = 0; i < d; ++i) {
            x[i] += tmp[i];
        }
    }
    tr.xOut.insert(tr.xOut.end(), x.begin(), x.end());
    std::vector<double> nf(d);
    tr.rf.push_back(rms_forward(x.data(), p.data() + lay.finalNorm, d, nf.data()));
    tr.nf.insert(tr.nf.end(), nf.begin(), nf.end());

    std::vector<double> logits(dims.vocab);
    matvec(nf.data(), p.data() + lay.head, d, dims.vocab, logits.data());
    for (std::size_t j = 0; j < dims.vocab; ++j) {
        logits[j] += p[lay.headBias + j];
    }
    softmax_inplace(logits);
    if (keepAllProbs) {
        tr.allProbs.push_back(logits);
    }
    tr.probs = std::move(logits);
    tr.tokens.push_back(token);
    ++tr.length;
}

// Accumulates gradients of (weight * sum_t -log p(target_t)) into grad.
void backward_sequence(const std::vector<double>& p, const TinyNeuralLM::Layout& lay, const Dims& dims,
                       const Trace& tr, std::span<const TokenId> targets, double weight, std::vector<double>& g) {
    const std::size_t d = dims.d;
    const std::size_t h = dims.h;
    const std::size_t T = tr.length;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    std::vector<double> dx(T * d, 0.0);
    {
        std::vector<double> dlogits(dims.vocab);
        std::vector<double> dnf(d);
        for (std::size_t t = 0; t < T; ++t) {
            const auto& probs = tr.allProbs[t];
            for (std::size_t j = 0; j < dims.vocab; ++j) {
                dlogits[j] = probs[j] * weight;
            }
            dlogits[targets[t]] -= weight;
            for (std::size_t j = 0; j < dims.vocab; ++j) {
                g[lay.headBias + j] += dlogits[j];
            }
            std::fill(dnf.begin(), dnf.end(), 0.0);
            matvec_backward(tr.nf.data() + t * d, p.data() + lay.head, dlogits.data(), d, dims.vocab, dnf.data(),
                            g.data() + lay.head);
            rms_backward(tr.xOut.data() + t * d, tr.rf[t], p.data() + lay.finalNorm, dnf.data(), d,
                         dx.data() + t * d, g.data() + lay.finalNorm);
        }
    }

    for (std::size_t l = lay.layers.size(); l-- > 0;) {
        const auto& off = lay.layers[l];
        const LayerTrace& L = tr.layers[l];

        // MLP residual: xOut = xMid + silu(n2 W1) W2
        std::vector<double> dxMid = dx;
        {
            std::vector<double> dz(h), du(h), dn2(d);
            for (std::size_t t = 0; t < T; ++t) {
                std::fill(dz.begin(), dz.end(), 0.0);
                matvec_backward(L.z.data() + t * h, p.data() + off.w2, dx.data() + t * d, h, d, dz.data(),
                                g.data() + off.w2);
                for (std::size_t j = 0; j < h; ++j) {
                    const double uj = L.u[t * h + j];
                    const double s = sigmoid(uj);
                    du[j] = dz[j] * s * (1.0 + uj * (1.0 - s));
                }
                std::fill(dn2.begin(), dn2.end(), 0.0);
                matvec_backward(L.n2.data() + t * d, p.data() + off.w1, du.data(), d, h, dn2.data(),
                                g.data() + off.w1);
                rms_backward(L.xMid.data() + t * d, L.r2[t], p.data() + off.norm2, dn2.data(), d,
                             dxMid.data() + t * d, g.data() + off.norm2);
            }
        }

        // Attention residual: xMid = xIn + o Wo
        std::vector<double> dxIn = dxMid;
        std::vector<double> dq(T * d, 0.0), dk(T * d, 0.0), dv(T * d, 0.0);
        {
            std::vector<double> dO(d);
            for (std::size_t t = 0; t < T; ++t) {
                std::fill(dO.begin(), dO.end(), 0.0);
                matvec_backward(L.o.data() + t * d, p.data() + off.wo, dxMid.data() + t * d, d, d, dO.data(),
                                g.data() + off.wo);
                const auto& att = L.att[t];
                std::vector<double> da(t + 1);
                double weighted = 0.0;
                for (std::size_t u = 0; u <= t; ++u) {
                    const double* vu = L.v.data() + u * d;
                    double s = 0.0;
                    for (std::size_t i = 0; i < d; ++i) {
                        s += dO[i] * vu[i];
                        dv[u * d + i] += att[u] * dO[i];
                    }
                    da[u] = s;
                    weighted += att[u] * s;
                }
                const double* qt = L.q.data() + t * d;
                for (std::size_t u = 0; u <= t; ++u) {
                    const double ds = att[u] * (da[u] - weighted) * scale;
                    const double* ku = L.k.data() + u * d;
                    for (std::size_t i = 0; i < d; ++i) {
                        dq[t * d + i] += ds * ku[i];
                        dk[u * d + i] += ds * qt[i];
                    }
                }
            }
        }
        {
            std::vector<double> dn1(d);
            for (std::size_t t = 0; t < T; ++t) {
                std::fill(dn1.begin(), dn1.end(), 0.0);
                const double* n1 = L.n1.data() + t * d;
                matvec_backward(n1, p.data() + off.wq, dq.data() + t * d, d, d, dn1.data(), g.data() + off.wq);
                matvec_backward(n1, p.data() + off.wk, dk.data() + t * d, d, d, dn1.data(), g.data() + off.wk);
                matvec_backward(n1, p.data() + off.wv, dv.data() + t * d, d, d, dn1.data(), g.data() + off.wv);
                rms_backward(L.xIn.data() + t * d, L.r1[t], p.data() + off.norm1, dn1.data(), d,
                             dxIn.data() + t * d, g.data() + off.norm1);
            }
        }
        dx = std::move(dxIn);
    }

    for (std::size_t t = 0; t < T; ++t) {
        double* dtok = g.data() + lay.tokenEmbedding + static_cast<std::size_t>(tr.tokens[t]) * d;
        double* dpos = g.data() + lay.positionEmbedding + t * d;
        for (std::size_t i = 0; i < d; ++i) {
            dtok[i] += dx[t * d + i];
            dpos[i] += dx[t * d + i];
        }
    }
}

}  // namespace

class NeuralDecoder final : public Decoder {
public:
    explicit NeuralDecoder(const TinyNeuralLM& model) : model_(model) {}

    void push(TokenId token) override {
        history_.push_back(token);
        const auto context = static_cast<std::size_t>(model_.config_.context);
        if (trace_.length < context) {
            forward_position(model_.params_, model_.layout_, dims(), trace_, token, false);
            return;
        }
        // Past the position table: re-run on the most recent window.
        trace_ = Trace{};
        for (std::size_t i = history_.size() - context; i < history_.size(); ++i) {
            forward_position(model_.params_, model_.layout_, dims(), trace_, history_[i], false);
        }
    }

    std::vector<double> distribution() override {
        if (trace_.length == 0) {
            return std::vector<double>(model_.vocab_.size(), 1.0 / static_cast<double>(model_.vocab_.size()));
        }
        return trace_.probs;
    }

private:
    Dims dims() const {
        return {static_cast<std::size_t>(model_.config_.dim),
                static_cast<std::size_t>(model_.config_.hidden_width()), model_.vocab_.size(),
                static_cast<std::size_t>(model_.config_.context)};
    }

    const TinyNeuralLM& model_;
    Trace trace_;
    std::vector<TokenId> history_;
};

TinyNeuralLM::TinyNeuralLM(Vocabulary vocabulary, NeuralConfig config, std::uint64_t initSeed)
    : vocab_(std::move(vocabulary)), config_(config) {
    if (config_.dim < 1 || config_.context < 1 || config_.layers < 0 || config_.batchSize < 1) {
        throw Error(ErrorKind::config, "invalid neural LM dimensions");
    }
    if (!(config_.learningRate > 0.0)) {
        throw Error(ErrorKind::config, "learning rate must be positive");
    }
    build_layout();
    params_.assign(layout_.total, 0.0);
    Rng rng(initSeed);
    const std::size_t d = static_cast<std::size_t>(config_.dim);
    const std::size_t h = static_cast<std::size_t>(config_.hidden_width());
    auto fill_normal = [&](std::size_t offset, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            params_[offset + i] = rng.normal() * config_.initScale;
        }
    };
    auto fill_ones = [&](std::size_t offset, std::size_t count) {
        std::fill(params_.begin() + static_cast<std::ptrdiff_t>(offset),
                  params_.begin() + static_cast<std::ptrdiff_t>(offset + count), 1.0);
    };
    fill_normal(layout_.tokenEmbedding, vocab_.size() * d);
    fill_normal(layout_.positionEmbedding, static_cast<std::size_t>(config_.context) * d);
    for (const auto& off : layout_.layers) {
        fill_ones(off.norm1, d);
        fill_normal(off.wq, d * d);
        fill_normal(off.wk, d * d);
        fill_normal(off.wv, d * d);
        fill_normal(off.wo, d * d);
        fill_ones(off.norm2, d);
        fill_normal(off.w1, d * h);
        fill_normal(off.w2, h * d);
    }
    fill_ones(layout_.finalNorm, d);
    fill_normal(layout_.head, d * vocab_.size());
    adamM_.assign(layout_.total, 0.0);
    adamV_.assign(layout_.total, 0.0);
}

void TinyNeuralLM::build_layout() {
    const std::size_t d = static_cast<std::size_t>(config_.dim);
    const std::size_t h = static_cast<std::size_t>(config_.hidden_width());
    const std::size_t v = vocab_.size();
    std::size_t at = 0;
    auto take = [&](std::size_t n) {
        const std::size_t start = at;
        at += n;
        return start;
    };
    layout_ = Layout{};
    layout_.tokenEmbedding = take(v * d);
    layout_.positionEmbedding = take(static_cast<std::size_t>(config_.context) * d);
    for (int l = 0; l < config_.layers; ++l) {
        LayerOffsets off{};
        off.norm1 = take(d);
        off.wq = take(d * d);
        off.wk = take(d * d);
        off.wv = take(d * d);
        off.wo = take(d * d);
        off.norm2 = take(d);
        off.w1 = take(d * h);
        off.w2 = take(h * d);
        layout_.layers.push_back(off);
    }
    layout_.finalNorm = take(d);
    layout_.head = take(d * v);
    layout_.headBias = take(v);
    layout_.total = at;
}

std::size_t TinyNeuralLM::output_bias_offset() const noexcept {
    return layout_.headBias;
}

std::vector<double> TinyNeuralLM::next_distribution(std::span<const TokenId> context) const {
    NeuralDecoder decoder(*this);
    const auto window = static_cast<std::size_t>(config_.context);
    const std::size_t start = context.size() > window ? context.size() - window : 0;
    for (std::size_t i = start; i < context.size(); ++i) {
        decoder.push(context[i]);
    }
    return decoder.distribution();
}

std::unique_ptr<Decoder> TinyNeuralLM::start() const {
    return std::make_unique<NeuralDecoder>(*this);
}

void TinyNeuralLM::check_tokens(const std::vector<TokenSequence>& batch) const {
    Corpus c;
    c.sequences = batch;
    check_corpus(c, vocab_.size());
}

double TinyNeuralLM::run_batch(const std::vector<TokenSequence>& batch, std::vector<double>* grad) const {
    if (batch.empty()) {
        throw Error(ErrorKind::data, "empty training batch");
    }
    check_tokens(batch);
    const Dims dims{static_cast<std::size_t>(config_.dim), static_cast<std::size_t>(config_.hidden_width()),
                    vocab_.size(), static_cast<std::size_t>(config_.context)};
    std::size_t totalTargets = 0;
    for (const auto& seq : batch) {
        totalTargets += std::min(seq.size() - 1, dims.context);
    }
    const double weight = 1.0 / static_cast<double>(totalTargets);
    if (grad != nullptr) {
        grad->assign(layout_.total, 0.0);
    }
    double nll = 0.0;
    for (const auto& seq : batch) {
        const std::size_t T = std::min(seq.size() - 1, dims.context);
        Trace tr;
        for (std::size_t t = 0; t < T; ++t) {
            forward_position(params_, layout_, dims, tr, seq[t], true);
            nll -= std::log(tr.allProbs[t][seq[t + 1]]);
        }
        if (grad != nullptr) {
            backward_sequence(params_, layout_, dims, tr, std::span<const TokenId>(seq).subspan(1, T), weight,
                              *grad);
        }
    }
    const double loss = nll * weight;
    if (!std::isfinite(loss)) {
        throw Error(ErrorKind::data, "non-finite training loss");
    }
    return loss;
}

double TinyNeuralLM::loss(const std::vector<TokenSequence>& batch) const {
    return run_batch(batch, nullptr);
}

double TinyNeuralLM::loss_and_gradient(const std::vector<TokenSequence>& batch, std::vector<double>& grad) const {
    return run_batch(batch, &grad);
}

double TinyNeuralLM::train_step(const std::vector<TokenSequence>& batch) {
    std::vector<double> grad;
    const double loss = run_batch(batch, &grad);
    if (config_.clipNorm > 0.0) {
        double sq = 0.0;
        for (double g : grad) {
            sq += g * g;
        }
        const double norm = std::sqrt(sq);
        if (norm > config_.clipNorm) {
            const double s = config_.clipNorm / norm;
            for (double& g : grad) {
                g *= s;
            }
        }
    }
    ++step_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        adamM_[i] = b1 * adamM_[i] + (1.0 - b1) * grad[i];
        adamV_[i] = b2 * adamV_[i] + (1.0 - b2) * grad[i] * grad[i];
        const double mhat = adamM_[i] / c1;
        const double vhat = adamV_[i] / c2;
        params_[i] -= config_.learningRate * mhat / (std::sqrt(vhat) + config_.adamEpsilon);
    }
    return loss;
}

std::vector<double> TinyNeuralLM::pretrain(const Corpus& corpus, int epochs, std::uint64_t seed) {
    check_corpus(corpus, vocab_.size());
    std::vector<double> trace;
    const auto batchSize = static_cast<std::size_t>(config_.batchSize);
    const auto context = static_cast<std::size_t>(config_.context);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::vector<std::size_t> order(corpus.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(std::span<std::size_t>(order));
        double nll = 0.0;
        std::size_t tokens = 0;
        for (std::size_t start = 0; start < order.size(); start += batchSize) {
            std::vector<TokenSequence> batch;
            std::size_t batchTokens = 0;
            for (std::size_t i = start; i < std::min(order.size(), start + batchSize); ++i) {
                batch.push_back(corpus.sequences[order[i]]);
                batchTokens += std::min(batch.back().size() - 1, context);
            }
            nll += train_step(batch) * static_cast<double>(batchTokens);
            tokens += batchTokens;
        }
        trace.push_back(nll / static_cast<double>(tokens));
    }
    lossTrace_.insert(lossTrace_.end(), trace.begin(), trace.end());
    return trace;
}

void TinyNeuralLM::finetune(const Corpus& downstream, int steps, std::uint64_t seed) {
    if (steps <= 0) {
        return;
    }
    check_corpus(downstream, vocab_.size());
    const auto batchSize = static_cast<std::size_t>(config_.batchSize);
    std::vector<std::size_t> order(downstream.size());
    std::size_t cursor = order.size();
    std::uint64_t pass = 0;
    for (int s = 0; s < steps; ++s) {
        std::vector<TokenSequence> batch;
        while (batch.size() < std::min(batchSize, downstream.size())) {
            if (cursor >= order.size()) {
                std::iota(order.begin(), order.end(), std::size_t{0});
                Rng rng(derive_seed(seed, pass++));
                rng.shuffle(std::span<std::size_t>(order));
                cursor = 0;
            }
            batch.push_back(downstream.sequences[order[cursor++]]);
        }
        train_step(batch);
    }
}

nlohmann::json TinyNeuralLM::describe() const {
    return {{"dim", config_.dim},
            {"context", config_.context},
            {"layers", config_.layers},
            {"hidden", config_.hidden_width()},
            {"learning_rate", config_.learningRate},
            {"batch_size", config_.batchSize},
            {"init_scale", config_.initScale},
            {"clip_norm", config_.clipNorm},
            {"beta1", config_.beta1},
            {"beta2", config_.beta2},
            {"adam_epsilon", config_.adamEpsilon}};
}

void TinyNeuralLM::write_state(std::ostream& out) const {
    BinaryWriter w(out);
    w.u64(step_);
    w.f64_array(params_);
    w.f64_array(adamM_);
    w.f64_array(adamV_);
    w.f64_array(lossTrace_);
}

std::unique_ptr<TinyNeuralLM> TinyNeuralLM::read(const nlohmann::json& header, std::istream& in) {
    const auto& c = header.at("config");
    NeuralConfig cfg;
    cfg.dim = c.at("dim").get<int>();
    cfg.context = c.at("context").get<int>();
    cfg.layers = c.at("layers").get<int>();
    cfg.hidden = c.at("hidden").get<int>();
    cfg.learningRate = c.at("learning_rate").get<double>();
    cfg.batchSize = c.at("batch_size").get<int>();
    cfg.initScale = c.at("init_scale").get<double>();
    cfg.clipNorm = c.at("clip_norm").get<double>();
    cfg.beta1 = c.at("beta1").get<double>();
    cfg.beta2 = c.at("beta2").get<double>();
    cfg.adamEpsilon = c.at("adam_epsilon").get<double>();
    Vocabulary vocab(header.at("vocabulary").get<std::vector<std::string>>());
    auto model = std::make_unique<TinyNeuralLM>(std::move(vocab), cfg, 0);
    BinaryReader r(in);
    model->step_ = r.u64();
    model->params_ = r.f64_array();
    model->adamM_ = r.f64_array();
    model->adamV_ = r.f64_array();
    model->lossTrace_ = r.f64_array();
    if (model->params_.size() != model->layout_.total || model->adamM_.size() != model->layout_.total ||
        model->adamV_.size() != model->layout_.total) {
        throw Error(ErrorKind::data, "neural checkpoint parameter count does not match its config");
    }
    return model;
}

double neural_gradient_check(TinyNeuralLM& model, const std::vector<TokenSequence>& batch, double epsilon) {
    if (batch.empty()) {
        throw Error(ErrorKind::data, "gradient check needs a non-empty batch");
    }
    std::vector<double> analytic;
    model.loss_and_gradient(batch, analytic);
    auto& params = model.parameters();
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + epsilon;
        const double plus = model.loss(batch);
        params[i] = saved - epsilon;
        const double minus = model.loss(batch);
        params[i] = saved;
        const double numeric = (plus - minus) / (2.0 * epsilon);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

}  // namespace tabsynth
