#include "arramon/model/network.h"

#include "arramon/error.h"

namespace arramon {

using ad::Matrix;
using ad::Var;

std::string_view name(Modality m) {
    switch (m) {
    case Modality::VisionLanguage:
        return "vl";
    case Modality::VisionOnly:
        return "vo";
    case Modality::LanguageOnly:
        return "lo";
    }
    return "?";
}

std::optional<Modality> parse_modality(std::string_view s) {
    if (s == "vl" || s == "vision-language") return Modality::VisionLanguage;
    if (s == "vo" || s == "vision-only") return Modality::VisionOnly;
    if (s == "lo" || s == "language-only") return Modality::LanguageOnly;
    return std::nullopt;
}

CrossAttention cross_attention(Var v, Var l, Var w_s, Var fuse_v, Var fuse_l, int positions) {
    if (v.cols() != l.cols() || w_s.cols() != v.cols()) throw ShapeError("cross_attention: feature sizes differ");
    if (positions < 1 || v.rows() % positions != 0) throw ShapeError("cross_attention: rows not a multiple of positions");
    const int steps = static_cast<int>(v.rows() / positions);
    CrossAttention ca;
    ca.s = ad::matmul_nt(ad::mul_row(v, w_s), l);
    ca.attn_l = ad::softmax_rows(ca.s);
    ca.attn_v = ad::block_softmax_cols(ca.s, positions);
    ca.l_bar = ad::matmul(ca.attn_l, l);
    ca.v_bar = ad::block_matmul_tn(ca.attn_v, v, positions);
    const Var v_parts[] = {v, ca.l_bar, ad::mul(v, ca.l_bar)};
    ca.v_hat = ad::matmul(ad::concat_cols(v_parts), fuse_v);
    const Var l_rep = steps == 1 ? l : ad::repeat_rows(l, steps);
    const Var l_parts[] = {l_rep, ca.v_bar, ad::mul(l_rep, ca.v_bar)};
    ca.l_hat = ad::matmul(ad::concat_cols(l_parts), fuse_l);
    return ca;
}

GeneralAttention general_attention(Var h, Var x, int block) {
    if (x.cols() != h.cols() || x.rows() != h.rows() * block) throw ShapeError("general_attention: bad shapes");
    GeneralAttention ga;
    ga.scores = ad::block_matvec(x, h, block);
    ga.alpha = ad::block_softmax_cols(ga.scores, block);
    ga.context = ad::block_matmul_tn(ga.alpha, x, block);
    return ga;
}

LstmState lstm_step(Var xw, LstmState s, Var wh, Var b, int hidden) {
    const Var gates = ad::add_row(ad::add(xw, ad::matmul(s.h, wh)), b);
    const Var i = ad::sigmoid(ad::slice_cols(gates, 0, hidden));
    const Var f = ad::sigmoid(ad::slice_cols(gates, hidden, hidden));
    const Var g = ad::tanh(ad::slice_cols(gates, 2 * hidden, hidden));
    const Var o = ad::sigmoid(ad::slice_cols(gates, 3 * hidden, hidden));
    const Var c = ad::add(ad::mul(f, s.c), ad::mul(i, g));
    return {ad::mul(o, ad::tanh(c)), c};
}

namespace {

Matrix uniform(Rng& rng, Eigen::Index r, Eigen::Index c, double range) {
    Matrix m(r, c);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-range, range);
    return m;
}

Var maybe_dropout(Var x, double p, bool train, Rng* rng) { return train && rng ? ad::dropout(x, p, *rng) : x; }

// PP is PhaseParams or const PhaseParams; Tape::param picks the trainable
// or read-only overload accordingly.
template <typename PP, typename WE>
Var encode_impl(ad::Tape& tape, const ModelConfig& cfg, WE& word_emb, PP& pp, std::span<const int> tokens, bool train,
                Rng* rng) {
    if (tokens.empty()) throw ShapeError("encode_instruction: empty token list");
    for (int id : tokens) {
        if (id < 0 || id >= word_emb.value.rows()) throw VocabError("token id " + std::to_string(id) + " out of range");
    }
    const int d = cfg.hidden;
    Var x = ad::gather_rows(tape.param(word_emb), tokens);
    x = maybe_dropout(x, cfg.dropout, train, rng);
    const Var xw = ad::matmul(x, tape.param(pp.enc_wx));
    const Var wh = tape.param(pp.enc_wh);
    const Var b = tape.param(pp.enc_b);
    LstmState s{tape.constant(Matrix::Zero(1, d)), tape.constant(Matrix::Zero(1, d))};
    std::vector<Var> rows;
    rows.reserve(tokens.size());
    for (std::size_t j = 0; j < tokens.size(); ++j) {
        s = lstm_step(ad::slice_rows(xw, static_cast<Eigen::Index>(j), 1), s, wh, b, d);
        rows.push_back(s.h);
    }
    return ad::concat_rows(rows);
}

template <typename PP>
Var visual_impl(ad::Tape& tape, PP& pp, const Matrix& features) {
    return ad::tanh(ad::add_row(ad::matmul(tape.constant(features), tape.param(pp.vis_w)), tape.param(pp.vis_b)));
}

template <typename PP>
Var head_impl(ad::Tape& tape, const ModelConfig& cfg, PP& pp, std::optional<Var> l_tilde, std::optional<Var> v, Var h,
              bool train, Rng* rng) {
    const int positions = cfg.features.grid * cfg.features.grid;
    Var feat;
    switch (cfg.modality) {
    case Modality::VisionLanguage: {
        const auto ca = cross_attention(*v, *l_tilde, tape.param(pp.w_s), tape.param(pp.fuse_v), tape.param(pp.fuse_l),
                                        positions);
        const auto gv = general_attention(h, ca.v_hat, positions);
        const auto gl = general_attention(h, ca.l_hat, static_cast<int>(l_tilde->rows()));
        const Var parts[] = {gv.context, gl.context};
        feat = ad::concat_cols(parts);
        break;
    }
    case Modality::VisionOnly:
        feat = general_attention(h, *v, positions).context;
        break;
    case Modality::LanguageOnly: {
        // Every step attends over the same rows, so no block layout is needed.
        const Var alpha = ad::softmax_rows(ad::matmul_nt(h, *l_tilde));
        feat = ad::matmul(alpha, *l_tilde);
        break;
    }
    }
    feat = maybe_dropout(feat, cfg.dropout, train, rng);
    return ad::add_row(ad::matmul(feat, tape.param(pp.out_w)), tape.param(pp.out_b));
}

} // namespace

Network::Network(ModelConfig cfg, Vocab vocab) : cfg_(cfg), vocab_(std::move(vocab)) {
    Rng rng(cfg_.seed);
    const double r = cfg_.init_range;
    const int d = cfg_.hidden;
    word_emb_ = ad::Param("word_emb", uniform(rng, vocab_.size(), cfg_.word_dim, r));
    const int fused = cfg_.modality == Modality::VisionLanguage ? 2 * d : d;
    for (Phase p : {Phase::Navigation, Phase::Assembly}) {
        const std::string pre = std::string(name(p)) + ".";
        PhaseParams& pp = phases_[static_cast<std::size_t>(p)];
        pp.enc_wx = ad::Param(pre + "enc_wx", uniform(rng, cfg_.word_dim, 4 * d, r));
        pp.enc_wh = ad::Param(pre + "enc_wh", uniform(rng, d, 4 * d, r));
        pp.enc_b = ad::Param(pre + "enc_b", uniform(rng, 1, 4 * d, r));
        pp.act_emb = ad::Param(pre + "act_emb", uniform(rng, kActionCount + 1, cfg_.action_dim, r));
        pp.dec_wx = ad::Param(pre + "dec_wx", uniform(rng, cfg_.action_dim, 4 * d, r));
        pp.dec_wh = ad::Param(pre + "dec_wh", uniform(rng, d, 4 * d, r));
        pp.dec_b = ad::Param(pre + "dec_b", uniform(rng, 1, 4 * d, r));
        pp.vis_w = ad::Param(pre + "vis_w", uniform(rng, channel::kCount, d, r));
        pp.vis_b = ad::Param(pre + "vis_b", uniform(rng, 1, d, r));
        pp.w_s = ad::Param(pre + "w_s", uniform(rng, 1, d, r));
        pp.fuse_v = ad::Param(pre + "fuse_v", uniform(rng, 3 * d, d, r));
        pp.fuse_l = ad::Param(pre + "fuse_l", uniform(rng, 3 * d, d, r));
        pp.out_w = ad::Param(pre + "out_w", cfg_.zero_output_init ? Matrix::Zero(fused, kActionCount)
                                                                   : uniform(rng, fused, kActionCount, r));
        pp.out_b = ad::Param(pre + "out_b", cfg_.zero_output_init ? Matrix::Zero(1, kActionCount)
                                                                   : uniform(rng, 1, kActionCount, r));
    }
}

std::vector<ad::Param*> Network::params() {
    std::vector<ad::Param*> out{&word_emb_};
    for (auto& pp : phases_) {
        for (ad::Param* p : {&pp.enc_wx, &pp.enc_wh, &pp.enc_b, &pp.act_emb, &pp.dec_wx, &pp.dec_wh, &pp.dec_b,
                             &pp.vis_w, &pp.vis_b, &pp.w_s, &pp.fuse_v, &pp.fuse_l, &pp.out_w, &pp.out_b}) {
            out.push_back(p);
        }
    }
    return out;
}

std::vector<const ad::Param*> Network::params() const {
    auto mut = const_cast<Network*>(this)->params();
    return {mut.begin(), mut.end()};
}

Var Network::encode_instruction(ad::Tape& tape, Phase phase, std::span<const int> tokens, bool train, Rng* rng) {
    return encode_impl(tape, cfg_, word_emb_, phase_params(phase), tokens, train, rng);
}

Var Network::forward(ad::Tape& tape, Phase phase, std::span<const int> tokens, const Eigen::MatrixXd& features,
                     std::span<const int> prev_actions, bool train, Rng* rng) {
    const int positions = cfg_.features.grid * cfg_.features.grid;
    const auto steps = static_cast<Eigen::Index>(prev_actions.size());
    if (steps == 0) throw ShapeError("forward: empty action sequence");
    if (features.rows() != steps * positions || features.cols() != channel::kCount) {
        throw ShapeError("forward: feature rows do not match the action count");
    }
    PhaseParams& pp = phase_params(phase);
    const int d = cfg_.hidden;

    std::optional<Var> l_tilde;
    if (cfg_.modality != Modality::VisionOnly) l_tilde = encode_instruction(tape, phase, tokens, train, rng);
    std::optional<Var> v;
    if (cfg_.modality != Modality::LanguageOnly) v = visual_impl(tape, pp, features);

    Var a = ad::gather_rows(tape.param(pp.act_emb), prev_actions);
    a = maybe_dropout(a, cfg_.dropout, train, rng);
    const Var aw = ad::matmul(a, tape.param(pp.dec_wx));
    const Var wh = tape.param(pp.dec_wh);
    const Var b = tape.param(pp.dec_b);
    LstmState s{tape.constant(Matrix::Zero(1, d)), tape.constant(Matrix::Zero(1, d))};
    std::vector<Var> hs;
    hs.reserve(prev_actions.size());
    for (Eigen::Index t = 0; t < steps; ++t) {
        s = lstm_step(ad::slice_rows(aw, t, 1), s, wh, b, d);
        hs.push_back(s.h);
    }
    return head_impl(tape, cfg_, pp, l_tilde, v, ad::concat_rows(hs), train, rng);
}

Network::Memory Network::begin(Phase phase, std::span<const int> tokens) const {
    Memory m;
    m.phase = phase;
    m.h = Matrix::Zero(1, cfg_.hidden);
    m.c = Matrix::Zero(1, cfg_.hidden);
    if (cfg_.modality != Modality::VisionOnly) {
        ad::Tape tape;
        const PhaseParams& pp = phases_[static_cast<std::size_t>(phase)];
        m.l_tilde = encode_impl(tape, cfg_, word_emb_, pp, tokens, false, nullptr).value();
    }
    return m;
}

Eigen::RowVectorXd Network::step(Memory& m, const Eigen::MatrixXd& features) const {
    ad::Tape tape;
    const PhaseParams& pp = phases_[static_cast<std::size_t>(m.phase)];
    const int ids[] = {m.prev};
    const Var aw = ad::matmul(ad::gather_rows(tape.param(pp.act_emb), ids), tape.param(pp.dec_wx));
    const LstmState s = lstm_step(aw, {tape.constant(m.h), tape.constant(m.c)}, tape.param(pp.dec_wh),
                                  tape.param(pp.dec_b), cfg_.hidden);
    m.h = s.h.value();
    m.c = s.c.value();
    std::optional<Var> l_tilde;
    if (cfg_.modality != Modality::VisionOnly) l_tilde = tape.constant(m.l_tilde);
    std::optional<Var> v;
    if (cfg_.modality != Modality::LanguageOnly) v = visual_impl(tape, pp, features);
    return head_impl(tape, cfg_, pp, l_tilde, v, s.h, false, nullptr).value().row(0);
}

} // namespace arramon
