#ifndef DOCGCN_ENCODING_HPP
#define DOCGCN_ENCODING_HPP

#include "docgcn/common.hpp"
#include "docgcn/corpus.hpp"

#include <string>
#include <vector>

namespace docgcn::encoding {

inline constexpr int kEmbeddingDim = 768;
inline constexpr int kLstmHidden = 384;
inline constexpr int kSequenceLength = 16;

/// Constituency label inventory. Index 0 is UNK and absorbs unseen labels.
class SymbolTable {
public:
    /// Penn Treebank phrase labels plus UNK.
    SymbolTable();
    explicit SymbolTable(std::vector<std::string> names);

    int index(const std::string& symbol) const;
    const std::vector<std::string>& names() const { return names_; }
    std::size_t size() const { return names_.size(); }

    friend bool operator==(const SymbolTable&, const SymbolTable&) = default;

private:
    std::vector<std::string> names_;
};

/// out[2k] = sin(t / 10000^(2k/dim)), out[2k+1] = cos(t / 10000^(2k/dim)).
Vector sinusoidal_encode(double t, int dim);

/// Density-graph node feature (used for both the ratio and the raw character count).
Vector encode_density_node(double value);

/// Single-layer bidirectional LSTM. Gates are laid out [input, forget, cell, output]
/// along the 4h axis; inputs are batched row-wise (B x input_dim per step).
class BiLstm {
public:
    struct Direction {
        Matrix w_ih;  // input_dim x 4h
        Matrix w_hh;  // h x 4h
        Matrix bias;  // 1 x 4h
    };

    /// Gradient buffers with the same shapes as the parameters.
    struct Grads {
        Direction fwd, bwd;
        void zero_like(const BiLstm& m);
    };

    /// Cached activations of one forward pass, consumed by backward().
    struct Tape {
        struct Step {
            Matrix h_prev, c_prev, i, f, g, o, c;
        };
        std::vector<Matrix> inputs;
        std::vector<bool> nonzero;
        std::vector<Step> fwd, bwd;
    };

    BiLstm() = default;
    BiLstm(int input_dim, int hidden, Rng& rng);

    int input_dim() const { return static_cast<int>(fwd_.w_ih.rows()); }
    int hidden() const { return static_cast<int>(fwd_.w_hh.rows()); }
    int output_dim() const { return 2 * hidden(); }

    /// Runs both directions over `steps` (each B x input_dim) and returns
    /// B x 2h: [forward final state | backward final state].
    Matrix forward(const std::vector<Matrix>& steps, Tape* tape = nullptr) const;

    /// Accumulates parameter gradients for d_out (B x 2h) into `grads`.
    void backward(const Tape& tape, const Matrix& d_out, Grads& grads) const;

    Direction& fwd() { return fwd_; }
    Direction& bwd() { return bwd_; }
    const Direction& fwd() const { return fwd_; }
    const Direction& bwd() const { return bwd_; }

    std::vector<Param> params(Grads& grads);

private:
    Direction fwd_, bwd_;
};

/// Pads (zeros) or truncates a sequence of row vectors to `length` steps.
std::vector<Matrix> pad_sequence(const std::vector<Vector>& seq, int length);

/// Encodes one sequence of input vectors; empty sequences are rejected.
Vector bilstm_encode(const std::vector<Vector>& seq, const BiLstm& lstm, int length = kSequenceLength);

/// Symbol sequence for parse level 1 or 2 of a segment; UNK when absent.
std::vector<int> symbol_sequence(const corpus::Segment& seg, int level, const SymbolTable& table);

/// Deduplicated batch of symbol sequences: identical sequences share one LSTM run.
struct SymbolBatch {
    std::vector<std::vector<int>> unique;
    std::vector<std::size_t> node_to_unique;

    static SymbolBatch from(const std::vector<std::vector<int>>& sequences);
    /// Per-step input matrices (unique x dim) of sinusoidal symbol embeddings.
    std::vector<Matrix> step_inputs(int dim, int length) const;
};

/// Syntactic node features for a batch: N x output_dim. When `tape` is given the
/// run is recorded for syntactic_backward().
Matrix encode_symbol_batch(const SymbolBatch& batch, const BiLstm& lstm, BiLstm::Tape* tape = nullptr,
                           int length = kSequenceLength);

/// Back-propagates dL/dfeatures (N x output_dim) into the LSTM gradients.
void symbol_batch_backward(const SymbolBatch& batch, const BiLstm& lstm, const BiLstm::Tape& tape,
                           const Matrix& d_features, BiLstm::Grads& grads);

Vector encode_syntactic_node(const corpus::Segment& seg, int level, const SymbolTable& table, const BiLstm& lstm);

}  // namespace docgcn::encoding

#endif  // DOCGCN_ENCODING_HPP
