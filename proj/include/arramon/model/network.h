#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "arramon/action.h"
#include "arramon/model/autodiff.h"
#include "arramon/model/features.h"
#include "arramon/model/vocab.h"

namespace arramon {

/// VisionLanguage is the full model; the ablations drop the cross
/// attention and keep one input stream.
enum class Modality { VisionLanguage, VisionOnly, LanguageOnly };

std::string_view name(Modality m);
std::optional<Modality> parse_modality(std::string_view s);

struct ModelConfig {
    int hidden = 128;
    int word_dim = 300;
    int action_dim = 64;
    FeatureConfig features;
    double dropout = 0.3;
    double init_range = 0.08;
    bool zero_output_init = true;
    Modality modality = Modality::VisionLanguage;
    std::uint64_t seed = 1;

    bool operator==(const ModelConfig& o) const {
        return hidden == o.hidden && word_dim == o.word_dim && action_dim == o.action_dim &&
               features.grid == o.features.grid && features.bin_deg == o.features.bin_deg &&
               features.view_range == o.features.view_range && dropout == o.dropout && init_range == o.init_range &&
               zero_output_init == o.zero_output_init && modality == o.modality && seed == o.seed;
    }
};

/// One phase's parameters. The word embedding is shared between phases.
struct PhaseParams {
    ad::Param enc_wx, enc_wh, enc_b; ///< instruction LSTM
    ad::Param act_emb;               ///< 5 rows: four actions and a start symbol
    ad::Param dec_wx, dec_wh, dec_b; ///< action decoder LSTM
    ad::Param vis_w, vis_b;          ///< feature channels -> hidden
    ad::Param w_s;                   ///< similarity weights, 1 x hidden
    ad::Param fuse_v, fuse_l;        ///< 3*hidden x hidden
    ad::Param out_w, out_b;
};

struct CrossAttention {
    ad::Var s;      ///< similarity, (T*P) x l
    ad::Var attn_l; ///< row softmax of s
    ad::Var attn_v; ///< column softmax of each P-row block of s
    ad::Var l_bar;  ///< (T*P) x d
    ad::Var v_bar;  ///< (T*l) x d
    ad::Var v_hat;  ///< (T*P) x d
    ad::Var l_hat;  ///< (T*l) x d
};

/// `v` stacks T visual maps of `positions` rows each; `l` is the l x d
/// encoded instruction shared by every step.
CrossAttention cross_attention(ad::Var v, ad::Var l, ad::Var w_s, ad::Var fuse_v, ad::Var fuse_l, int positions);

struct GeneralAttention {
    ad::Var scores;  ///< (T*block) x 1
    ad::Var alpha;   ///< softmax of scores within each block
    ad::Var context; ///< T x d
};

/// Row t of `h` attends over rows [t*block, (t+1)*block) of `x`.
GeneralAttention general_attention(ad::Var h, ad::Var x, int block);

struct LstmState {
    ad::Var h;
    ad::Var c;
};

/// `xw` is the input already multiplied by the input weights (1 x 4*hidden);
/// gate order is input, forget, candidate, output.
LstmState lstm_step(ad::Var xw, LstmState s, ad::Var wh, ad::Var b, int hidden);

class Network {
  public:
    static constexpr int kStartAction = kActionCount;

    Network(ModelConfig cfg, Vocab vocab);

    const ModelConfig& config() const { return cfg_; }
    const Vocab& vocab() const { return vocab_; }
    std::vector<ad::Param*> params();
    std::vector<const ad::Param*> params() const;
    ad::Param& word_embedding() { return word_emb_; }
    PhaseParams& phase_params(Phase p) { return phases_[static_cast<std::size_t>(p)]; }

    /// l x hidden. Throws ShapeError on an empty token list.
    ad::Var encode_instruction(ad::Tape& tape, Phase phase, std::span<const int> tokens, bool train = false,
                               Rng* rng = nullptr);

    /// Teacher-forced logits, T x 4, for one phase. `features` stacks T
    /// featurized observations; `prev_actions` holds a_{t-1} with
    /// kStartAction at t = 0.
    ad::Var forward(ad::Tape& tape, Phase phase, std::span<const int> tokens, const Eigen::MatrixXd& features,
                    std::span<const int> prev_actions, bool train = false, Rng* rng = nullptr);

    /// Greedy decoding state for one phase.
    struct Memory {
        Phase phase = Phase::Navigation;
        Eigen::MatrixXd l_tilde;
        Eigen::MatrixXd h;
        Eigen::MatrixXd c;
        int prev = kStartAction;
    };
    Memory begin(Phase phase, std::span<const int> tokens) const;
    /// Advances the decoder with memory.prev and returns the 4 logits.
    Eigen::RowVectorXd step(Memory& memory, const Eigen::MatrixXd& features) const;

  private:
    ModelConfig cfg_;
    Vocab vocab_;
    ad::Param word_emb_;
    std::array<PhaseParams, 2> phases_;
};

} // namespace arramon
