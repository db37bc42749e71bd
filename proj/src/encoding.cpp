#include "docgcn/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace docgcn::encoding {

SymbolTable::SymbolTable()
    : names_({"UNK",  "S",    "SBAR",   "SBARQ",  "SINV",  "SQ",   "ADJP", "ADVP", "CONJP", "FRAG",
              "INTJ", "LST",  "NAC",    "NP",     "NX",    "PP",   "PRN",  "PRT",  "QP",    "RRC",
              "UCP",  "VP",   "WHADJP", "WHADVP", "WHNP",  "WHPP", "X"}) {}

SymbolTable::SymbolTable(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty() || names_[0] != "UNK") throw DataError("symbol table must start with UNK");
}

int SymbolTable::index(const std::string& symbol) const {
    auto it = std::find(names_.begin(), names_.end(), symbol);
    return it == names_.end() ? 0 : static_cast<int>(it - names_.begin());
}

Vector sinusoidal_encode(double t, int dim) {
    require(dim > 0 && dim % 2 == 0, "sinusoidal_encode: dim must be positive and even");
    Vector out(dim);
    for (int k = 0; k < dim / 2; ++k) {
        const double angle = t / std::pow(10000.0, 2.0 * k / dim);
        out(2 * k) = std::sin(angle);
        out(2 * k + 1) = std::cos(angle);
    }
    return out;
}

Vector encode_density_node(double value) { return sinusoidal_encode(value, kEmbeddingDim); }

// ---------------------------------------------------------------------------
// BiLstm

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

BiLstm::Direction make_direction(int input_dim, int hidden, Rng& rng) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(input_dim));
    return {uniform_matrix(rng, input_dim, 4 * hidden, limit), uniform_matrix(rng, hidden, 4 * hidden, limit),
            uniform_matrix(rng, 1, 4 * hidden, limit)};
}

// Runs one direction over steps in `order`; returns the final hidden state.
Matrix run_direction(const BiLstm::Direction& p, const std::vector<Matrix>& steps, const std::vector<bool>& nonzero,
                     bool reverse, std::vector<BiLstm::Tape::Step>* tape) {
    const auto h = p.w_hh.rows();
    const auto batch = steps.front().rows();
    const auto t_len = static_cast<int>(steps.size());
    Matrix hs = Matrix::Zero(batch, h), cs = Matrix::Zero(batch, h);
    Matrix z(batch, 4 * h);
    if (tape) tape->clear();
    for (int s = 0; s < t_len; ++s) {
        const int t = reverse ? t_len - 1 - s : s;
        z.noalias() = hs * p.w_hh;
        if (nonzero[static_cast<std::size_t>(t)]) z.noalias() += steps[static_cast<std::size_t>(t)] * p.w_ih;
        z.rowwise() += p.bias.row(0);
        Matrix i = z.leftCols(h).unaryExpr(&sigmoid);
        Matrix f = z.middleCols(h, h).unaryExpr(&sigmoid);
        Matrix g = z.middleCols(2 * h, h).array().tanh().matrix();
        Matrix o = z.rightCols(h).unaryExpr(&sigmoid);
        Matrix c = f.cwiseProduct(cs) + i.cwiseProduct(g);
        Matrix hn = o.cwiseProduct(c.array().tanh().matrix());
        if (tape) tape->push_back({hs, cs, std::move(i), std::move(f), std::move(g), std::move(o), c});
        cs = std::move(c);
        hs = std::move(hn);
    }
    return hs;
}

void back_direction(const BiLstm::Direction& p, const std::vector<Matrix>& steps, const std::vector<bool>& nonzero,
                    bool reverse, const std::vector<BiLstm::Tape::Step>& tape, Matrix dh, BiLstm::Direction& g) {
    const auto h = p.w_hh.rows();
    const auto t_len = static_cast<int>(steps.size());
    Matrix dc = Matrix::Zero(dh.rows(), h);
    Matrix dz(dh.rows(), 4 * h);
    for (int s = t_len - 1; s >= 0; --s) {
        const int t = reverse ? t_len - 1 - s : s;
        const auto& st = tape[static_cast<std::size_t>(s)];
        const Matrix tanh_c = st.c.array().tanh().matrix();
        const Matrix d_o = dh.cwiseProduct(tanh_c);
        dc.array() += dh.array() * st.o.array() * (1.0 - tanh_c.array().square());
        dz.leftCols(h) = (dc.array() * st.g.array() * st.i.array() * (1.0 - st.i.array())).matrix();
        dz.middleCols(h, h) = (dc.array() * st.c_prev.array() * st.f.array() * (1.0 - st.f.array())).matrix();
        dz.middleCols(2 * h, h) = (dc.array() * st.i.array() * (1.0 - st.g.array().square())).matrix();
        dz.rightCols(h) = (d_o.array() * st.o.array() * (1.0 - st.o.array())).matrix();
        if (nonzero[static_cast<std::size_t>(t)])
            g.w_ih.noalias() += steps[static_cast<std::size_t>(t)].transpose() * dz;
        g.w_hh.noalias() += st.h_prev.transpose() * dz;
        g.bias.noalias() += dz.colwise().sum();
        dh.noalias() = dz * p.w_hh.transpose();
        dc = dc.cwiseProduct(st.f);
    }
}

}  // namespace

BiLstm::BiLstm(int input_dim, int hidden, Rng& rng) {
    require(input_dim > 0 && hidden > 0, "BiLstm: dimensions must be positive");
    fwd_ = make_direction(input_dim, hidden, rng);
    bwd_ = make_direction(input_dim, hidden, rng);
}

void BiLstm::Grads::zero_like(const BiLstm& m) {
    for (auto [dst, src] : {std::pair{&fwd, &m.fwd()}, std::pair{&bwd, &m.bwd()}}) {
        dst->w_ih = Matrix::Zero(src->w_ih.rows(), src->w_ih.cols());
        dst->w_hh = Matrix::Zero(src->w_hh.rows(), src->w_hh.cols());
        dst->bias = Matrix::Zero(1, src->bias.cols());
    }
}

Matrix BiLstm::forward(const std::vector<Matrix>& steps, Tape* tape) const {
    require(!steps.empty(), "BiLstm::forward: empty sequence");
    std::vector<bool> nonzero(steps.size());
    for (std::size_t t = 0; t < steps.size(); ++t) {
        require(steps[t].cols() == input_dim(), "BiLstm::forward: input dimension mismatch");
        require(steps[t].rows() == steps[0].rows(), "BiLstm::forward: ragged batch");
        nonzero[t] = !steps[t].isZero(0.0);
    }
    const auto h = hidden();
    Matrix out(steps[0].rows(), 2 * h);
    out.leftCols(h) = run_direction(fwd_, steps, nonzero, false, tape ? &tape->fwd : nullptr);
    out.rightCols(h) = run_direction(bwd_, steps, nonzero, true, tape ? &tape->bwd : nullptr);
    if (tape) {
        tape->inputs = steps;
        tape->nonzero = std::move(nonzero);
    }
    return out;
}

void BiLstm::backward(const Tape& tape, const Matrix& d_out, Grads& grads) const {
    const auto h = hidden();
    require(d_out.cols() == 2 * h, "BiLstm::backward: gradient width mismatch");
    back_direction(fwd_, tape.inputs, tape.nonzero, false, tape.fwd, d_out.leftCols(h), grads.fwd);
    back_direction(bwd_, tape.inputs, tape.nonzero, true, tape.bwd, d_out.rightCols(h), grads.bwd);
}

std::vector<Param> BiLstm::params(Grads& g) {
    return {{&fwd_.w_ih, &g.fwd.w_ih}, {&fwd_.w_hh, &g.fwd.w_hh}, {&fwd_.bias, &g.fwd.bias},
            {&bwd_.w_ih, &g.bwd.w_ih}, {&bwd_.w_hh, &g.bwd.w_hh}, {&bwd_.bias, &g.bwd.bias}};
}

std::vector<Matrix> pad_sequence(const std::vector<Vector>& seq, int length) {
    require(!seq.empty(), "pad_sequence: empty sequence");
    require(length > 0, "pad_sequence: length must be positive");
    const auto dim = seq.front().size();
    std::vector<Matrix> steps;
    for (int t = 0; t < length; ++t) {
        Matrix m = Matrix::Zero(1, dim);
        if (t < static_cast<int>(seq.size())) m.row(0) = seq[static_cast<std::size_t>(t)].transpose();
        steps.push_back(std::move(m));
    }
    return steps;
}

Vector bilstm_encode(const std::vector<Vector>& seq, const BiLstm& lstm, int length) {
    require(!seq.empty(), "bilstm_encode: empty sequence");
    return lstm.forward(pad_sequence(seq, length)).row(0).transpose();
}

std::vector<int> symbol_sequence(const corpus::Segment& seg, int level, const SymbolTable& table) {
    require(level == 1 || level == 2, "symbol_sequence: level must be 1 or 2");
    std::vector<int> seq;
    if (level == 1) {
        seq.push_back(seg.parse_l1 ? table.index(*seg.parse_l1) : 0);
    } else if (seg.parse_l2) {
        for (const auto& s : *seg.parse_l2) seq.push_back(table.index(s));
    }
    if (seq.empty()) seq.push_back(0);
    return seq;
}

SymbolBatch SymbolBatch::from(const std::vector<std::vector<int>>& sequences) {
    SymbolBatch b;
    std::map<std::vector<int>, std::size_t> seen;
    for (const auto& s : sequences) {
        require(!s.empty(), "SymbolBatch: empty sequence");
        auto [it, inserted] = seen.emplace(s, b.unique.size());
        if (inserted) b.unique.push_back(s);
        b.node_to_unique.push_back(it->second);
    }
    return b;
}

std::vector<Matrix> SymbolBatch::step_inputs(int dim, int length) const {
    std::map<int, Vector> cache;
    std::vector<Matrix> steps(static_cast<std::size_t>(length), Matrix::Zero(static_cast<Eigen::Index>(unique.size()), dim));
    for (std::size_t u = 0; u < unique.size(); ++u) {
        for (int t = 0; t < length && t < static_cast<int>(unique[u].size()); ++t) {
            const int sym = unique[u][static_cast<std::size_t>(t)];
            auto it = cache.find(sym);
            if (it == cache.end()) it = cache.emplace(sym, sinusoidal_encode(sym, dim)).first;
            steps[static_cast<std::size_t>(t)].row(static_cast<Eigen::Index>(u)) = it->second.transpose();
        }
    }
    return steps;
}

Matrix encode_symbol_batch(const SymbolBatch& batch, const BiLstm& lstm, BiLstm::Tape* tape, int length) {
    const Matrix per_unique = lstm.forward(batch.step_inputs(lstm.input_dim(), length), tape);
    Matrix out(static_cast<Eigen::Index>(batch.node_to_unique.size()), per_unique.cols());
    for (std::size_t n = 0; n < batch.node_to_unique.size(); ++n)
        out.row(static_cast<Eigen::Index>(n)) = per_unique.row(static_cast<Eigen::Index>(batch.node_to_unique[n]));
    return out;
}

void symbol_batch_backward(const SymbolBatch& batch, const BiLstm& lstm, const BiLstm::Tape& tape,
                           const Matrix& d_features, BiLstm::Grads& grads) {
    Matrix d_unique = Matrix::Zero(static_cast<Eigen::Index>(batch.unique.size()), d_features.cols());
    for (std::size_t n = 0; n < batch.node_to_unique.size(); ++n)
        d_unique.row(static_cast<Eigen::Index>(batch.node_to_unique[n])) += d_features.row(static_cast<Eigen::Index>(n));
    lstm.backward(tape, d_unique, grads);
}

Vector encode_syntactic_node(const corpus::Segment& seg, int level, const SymbolTable& table, const BiLstm& lstm) {
    std::vector<Vector> seq;
    for (int sym : symbol_sequence(seg, level, table)) seq.push_back(sinusoidal_encode(sym, lstm.input_dim()));
    return bilstm_encode(seq, lstm);
}

}  // namespace docgcn::encoding
