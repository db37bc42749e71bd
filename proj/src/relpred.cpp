#include "docgcn/relpred.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace docgcn::relpred {

const std::array<std::pair<const char*, ParamField>, 23> kRelationFields{{
    {"proj.w", &RelationParams::proj_w}, {"proj.b", &RelationParams::proj_b},
    {"pos", &RelationParams::pos},       {"attn.wq", &RelationParams::wq},
    {"attn.bq", &RelationParams::bq},    {"attn.wk", &RelationParams::wk},
    {"attn.bk", &RelationParams::bk},    {"attn.wv", &RelationParams::wv},
    {"attn.bv", &RelationParams::bv},    {"attn.wo", &RelationParams::wo},
    {"attn.bo", &RelationParams::bo},    {"ln1.g", &RelationParams::ln1_g},
    {"ln1.b", &RelationParams::ln1_b},   {"ff1.w", &RelationParams::ff1_w},
    {"ff1.b", &RelationParams::ff1_b},   {"ff2.w", &RelationParams::ff2_w},
    {"ff2.b", &RelationParams::ff2_b},   {"ln2.g", &RelationParams::ln2_g},
    {"ln2.b", &RelationParams::ln2_b},   {"q_transform.w", &RelationParams::qt_w},
    {"q_transform.b", &RelationParams::qt_b}, {"k_transform.w", &RelationParams::kt_w},
    {"k_transform.b", &RelationParams::kt_b},
}};

RelationModel RelationModel::create(const RelationConfig& cfg, std::uint64_t seed) {
    require(cfg.input_dim > 0 && cfg.d_model > 0 && cfg.ff_dim > 0 && cfg.max_len > 1,
            "RelationModel: dimensions must be positive");
    require(cfg.heads > 0 && cfg.d_model % cfg.heads == 0, "RelationModel: d_model must be divisible by heads");
    Rng rng(seed);
    const auto dm = cfg.d_model;
    RelationModel m;
    m.config = cfg;
    auto& p = m.params;
    auto zeros = [](Eigen::Index c) { return Matrix::Zero(1, c); };
    p.proj_w = glorot(rng, cfg.input_dim, dm);
    p.proj_b = zeros(dm);
    p.pos = uniform_matrix(rng, cfg.max_len, dm, 0.05);
    p.wq = glorot(rng, dm, dm);
    p.bq = zeros(dm);
    p.wk = glorot(rng, dm, dm);
    p.bk = zeros(dm);
    p.wv = glorot(rng, dm, dm);
    p.bv = zeros(dm);
    p.wo = glorot(rng, dm, dm);
    p.bo = zeros(dm);
    p.ln1_g = Matrix::Ones(1, dm);
    p.ln1_b = zeros(dm);
    p.ff1_w = glorot(rng, dm, cfg.ff_dim);
    p.ff1_b = zeros(cfg.ff_dim);
    p.ff2_w = glorot(rng, cfg.ff_dim, dm);
    p.ff2_b = zeros(dm);
    p.ln2_g = Matrix::Ones(1, dm);
    p.ln2_b = zeros(dm);
    // The parent score is an unscaled dot product over d_model terms; small
    // transforms keep the initial parent distribution close to uniform.
    const double qk_scale = 1.0 / static_cast<double>(dm);
    p.qt_w = uniform_matrix(rng, dm, dm, qk_scale);
    p.qt_b = zeros(dm);
    p.kt_w = uniform_matrix(rng, dm, dm, qk_scale);
    p.kt_b = zeros(dm);
    return m;
}

RelationParams zeros_like(const RelationParams& p) {
    RelationParams z;
    for (const auto& [name, field] : kRelationFields) z.*field = Matrix::Zero((p.*field).rows(), (p.*field).cols());
    return z;
}

std::vector<Param> parameters(RelationModel& m, RelationParams& grads) {
    std::vector<Param> ps;
    for (const auto& [name, field] : kRelationFields) ps.push_back({&(m.params.*field), &(grads.*field)});
    return ps;
}

namespace {

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
    Matrix y = x * w;
    y.rowwise() += b.row(0);
    return y;
}

struct LayerNormCache {
    Matrix xhat;
    Vector inv_std;
};

Matrix layer_norm(const Matrix& x, const Matrix& g, const Matrix& b, double eps, LayerNormCache& cache) {
    const auto width = static_cast<double>(x.cols());
    const Vector mean = x.rowwise().mean();
    Matrix centered = x.colwise() - mean;
    cache.inv_std = ((centered.array().square().rowwise().sum() / width) + eps).rsqrt().matrix();
    cache.xhat = cache.inv_std.asDiagonal() * centered;
    Matrix y = cache.xhat.array().rowwise() * g.row(0).array();
    y.rowwise() += b.row(0);
    return y;
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& g, const LayerNormCache& c, Matrix& dg, Matrix& db) {
    dg += (dy.cwiseProduct(c.xhat)).colwise().sum();
    db += dy.colwise().sum();
    const Matrix dxhat = dy.array().rowwise() * g.row(0).array();
    const Vector mean_d = dxhat.rowwise().mean();
    const Vector mean_dx = dxhat.cwiseProduct(c.xhat).rowwise().mean();
    Matrix dx = dxhat.colwise() - mean_d;
    dx -= (c.xhat.array().colwise() * mean_dx.array()).matrix();
    return c.inv_std.asDiagonal() * dx;
}

struct Tape {
    Eigen::Index n = 0;
    Matrix e, q, k, v, o;
    std::vector<Matrix> attn;  // per head, L x L
    Matrix x1, h, hr, x2, qt, kt, probs;
    LayerNormCache ln1, ln2;
};

void forward(const Matrix& inputs, const RelationModel& m, Tape& t) {
    const auto& cfg = m.config;
    const auto& p = m.params;
    const auto n = inputs.rows();
    require(n >= 1, "relation forward: empty page");
    require(inputs.cols() == cfg.input_dim, "relation forward: input width mismatch");
    if (n + 1 > cfg.max_len)
        throw DataError("relation model capacity exceeded: " + std::to_string(n) + " segments + no-parent slot > " +
                        std::to_string(cfg.max_len));
    const auto len = n + 1;
    const auto dm = cfg.d_model;
    const auto dh = dm / cfg.heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dm));
    t.n = n;

    t.e = Matrix::Zero(len, dm);
    t.e.topRows(n) = affine(inputs, p.proj_w, p.proj_b) + p.pos.topRows(n);

    t.q = affine(t.e, p.wq, p.bq);
    t.k = affine(t.e, p.wk, p.bk);
    t.v = affine(t.e, p.wv, p.bv);
    t.o.resize(len, dm);
    t.attn.resize(static_cast<std::size_t>(cfg.heads));
    for (int h = 0; h < cfg.heads; ++h) {
        const Matrix s = (t.q.middleCols(h * dh, dh) * t.k.middleCols(h * dh, dh).transpose()) * scale;
        auto& a = t.attn[static_cast<std::size_t>(h)];
        a = softmax_rows(s);
        t.o.middleCols(h * dh, dh).noalias() = a * t.v.middleCols(h * dh, dh);
    }
    const Matrix r1 = t.e + affine(t.o, p.wo, p.bo);
    t.x1 = layer_norm(r1, p.ln1_g, p.ln1_b, cfg.layer_norm_eps, t.ln1);
    t.h = affine(t.x1, p.ff1_w, p.ff1_b);
    t.hr = t.h.cwiseMax(0.0);
    const Matrix r2 = t.x1 + affine(t.hr, p.ff2_w, p.ff2_b);
    t.x2 = layer_norm(r2, p.ln2_g, p.ln2_b, cfg.layer_norm_eps, t.ln2);

    t.qt = affine(t.x2.topRows(n), p.qt_w, p.qt_b);
    t.kt = affine(t.x2, p.kt_w, p.kt_b);
    Matrix scores = t.qt * t.kt.transpose();
    for (Eigen::Index i = 0; i < n; ++i) scores(i, i) = -std::numeric_limits<double>::infinity();
    t.probs = softmax_rows(scores);
}

void backward(const Matrix& inputs, const RelationModel& m, const Tape& t, const Matrix& dscores, RelationParams& g) {
    const auto& cfg = m.config;
    const auto& p = m.params;
    const auto n = t.n;
    const auto dm = cfg.d_model;
    const auto dh = dm / cfg.heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dm));

    const Matrix dqt = dscores * t.kt;
    const Matrix dkt = dscores.transpose() * t.qt;
    g.qt_w.noalias() += t.x2.topRows(n).transpose() * dqt;
    g.qt_b += dqt.colwise().sum();
    g.kt_w.noalias() += t.x2.transpose() * dkt;
    g.kt_b += dkt.colwise().sum();
    Matrix dx2 = dkt * p.kt_w.transpose();
    dx2.topRows(n).noalias() += dqt * p.qt_w.transpose();

    const Matrix dr2 = layer_norm_backward(dx2, p.ln2_g, t.ln2, g.ln2_g, g.ln2_b);
    g.ff2_w.noalias() += t.hr.transpose() * dr2;
    g.ff2_b += dr2.colwise().sum();
    const Matrix dh_pre = (dr2 * p.ff2_w.transpose()).cwiseProduct((t.h.array() > 0.0).cast<double>().matrix());
    g.ff1_w.noalias() += t.x1.transpose() * dh_pre;
    g.ff1_b += dh_pre.colwise().sum();
    const Matrix dx1 = dr2 + dh_pre * p.ff1_w.transpose();

    const Matrix dr1 = layer_norm_backward(dx1, p.ln1_g, t.ln1, g.ln1_g, g.ln1_b);
    g.wo.noalias() += t.o.transpose() * dr1;
    g.bo += dr1.colwise().sum();
    const Matrix d_o = dr1 * p.wo.transpose();
    Matrix dq(t.q.rows(), dm), dk(t.k.rows(), dm), dv(t.v.rows(), dm);
    for (int h = 0; h < cfg.heads; ++h) {
        const auto& a = t.attn[static_cast<std::size_t>(h)];
        const Matrix doh = d_o.middleCols(h * dh, dh);
        const Matrix da = doh * t.v.middleCols(h * dh, dh).transpose();
        dv.middleCols(h * dh, dh).noalias() = a.transpose() * doh;
        const Vector row_dot = da.cwiseProduct(a).rowwise().sum();
        const Matrix ds = a.cwiseProduct((da.colwise() - row_dot)) * scale;
        dq.middleCols(h * dh, dh).noalias() = ds * t.k.middleCols(h * dh, dh);
        dk.middleCols(h * dh, dh).noalias() = ds.transpose() * t.q.middleCols(h * dh, dh);
    }
    g.wq.noalias() += t.e.transpose() * dq;
    g.bq += dq.colwise().sum();
    g.wk.noalias() += t.e.transpose() * dk;
    g.bk += dk.colwise().sum();
    g.wv.noalias() += t.e.transpose() * dv;
    g.bv += dv.colwise().sum();
    Matrix de = dr1;
    de.noalias() += dq * p.wq.transpose();
    de.noalias() += dk * p.wk.transpose();
    de.noalias() += dv * p.wv.transpose();

    // The no-parent row is a constant; only real rows reach the projection.
    const auto de_real = de.topRows(n);
    g.proj_w.noalias() += inputs.transpose() * de_real;
    g.proj_b += de_real.colwise().sum();
    g.pos.topRows(n) += de_real;
}

}  // namespace

Matrix attention_forward(const Matrix& inputs, const RelationModel& m) {
    Tape t;
    forward(inputs, m, t);
    return t.probs;
}

double attention_loss_grad(const Matrix& inputs, const std::vector<std::size_t>& targets, const RelationModel& m,
                           RelationParams& grads) {
    Tape t;
    forward(inputs, m, t);
    const auto n = t.n;
    require(static_cast<Eigen::Index>(targets.size()) == n, "attention_loss_grad: one target per segment");
    double loss = 0.0;
    Matrix dscores = t.probs;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto y = static_cast<Eigen::Index>(targets[static_cast<std::size_t>(i)]);
        require(y >= 0 && y <= n && y != i, "attention_loss_grad: invalid parent target");
        loss -= std::log(t.probs(i, y));
        dscores(i, y) -= 1.0;
    }
    dscores /= static_cast<double>(n);
    grads = zeros_like(m.params);
    backward(inputs, m, t, dscores, grads);
    return loss / static_cast<double>(n);
}

std::vector<std::size_t> reading_order(const corpus::Page& page) {
    std::vector<std::size_t> order(page.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ba = page.segments[a].bbox;
        const auto& bb = page.segments[b].bbox;
        if (ba.y1 != bb.y1) return ba.y1 < bb.y1;
        return ba.x1 < bb.x1;
    });
    return order;
}

Matrix page_inputs(const corpus::Page& page, const std::vector<std::size_t>& order,
                   const corpus::FeatureConfig& features) {
    const int sd = features.semantic_dim, ad = features.appearance_dim;
    Matrix x(static_cast<Eigen::Index>(order.size()), sd + ad);
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& seg = page.segments[order[r]];
        const auto s = corpus::semantic_features(seg, features);
        const auto a = corpus::appearance_features(seg, features);
        if (static_cast<int>(s.size()) != sd || static_cast<int>(a.size()) != ad)
            throw DataError("segment " + seg.id + ": feature vector has wrong length");
        const auto row = static_cast<Eigen::Index>(r);
        x.row(row).head(sd) = Eigen::Map<const RowVector>(s.data(), sd);
        x.row(row).tail(ad) = Eigen::Map<const RowVector>(a.data(), ad);
    }
    return x;
}

Matrix relation_forward(const corpus::Page& page, const RelationModel& m, const corpus::FeatureConfig& features) {
    const auto order = reading_order(page);
    const Matrix seq_probs = attention_forward(page_inputs(page, order, features), m);
    const auto n = static_cast<Eigen::Index>(page.size());
    Matrix out(n, n + 1);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto i = static_cast<Eigen::Index>(order[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < n; ++c) out(i, static_cast<Eigen::Index>(order[static_cast<std::size_t>(c)])) = seq_probs(r, c);
        out(i, n) = seq_probs(r, n);
    }
    return out;
}

std::vector<std::optional<std::size_t>> decode_parents(const Matrix& probs) {
    const auto n = probs.rows();
    require(probs.cols() == n + 1, "decode_parents: expected N x (N + 1)");
    std::vector<std::optional<std::size_t>> parent(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best = n;  // no parent unless a real segment is strictly better
        double best_p = probs(i, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            if (probs(i, j) > best_p) {
                best_p = probs(i, j);
                best = j;
            }
        }
        if (best != n) parent[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    }

    // Each node has at most one outgoing link, so every cycle is found by walking.
    std::vector<int> state(static_cast<std::size_t>(n), 0);  // 0 new, 1 on stack, 2 done
    for (std::size_t start = 0; start < parent.size(); ++start) {
        std::vector<std::size_t> path;
        std::size_t cur = start;
        while (state[cur] == 0) {
            state[cur] = 1;
            path.push_back(cur);
            if (!parent[cur]) break;
            cur = *parent[cur];
        }
        if (state[cur] == 1 && parent[cur]) {
            // cur is on the current path: the cycle runs from cur back to cur.
            std::size_t weakest = cur;
            std::size_t node = cur;
            do {
                const auto w = static_cast<Eigen::Index>(weakest), v = static_cast<Eigen::Index>(node);
                const double pv = probs(v, static_cast<Eigen::Index>(*parent[node]));
                const double pw = probs(w, static_cast<Eigen::Index>(*parent[weakest]));
                if (pv < pw || (pv == pw && node < weakest)) weakest = node;
                node = *parent[node];
            } while (node != cur);
            parent[weakest].reset();
        }
        for (std::size_t v : path) state[v] = 2;
    }
    return parent;
}

std::vector<std::optional<std::size_t>> predict_relations(const corpus::Page& page, const RelationModel& m,
                                                          const corpus::FeatureConfig& features) {
    return decode_parents(relation_forward(page, m, features));
}

RelationTrainResult train_relations(const std::vector<corpus::Page>& pages, RelationModel init,
                                    const RelationTrainConfig& cfg, const corpus::FeatureConfig& features) {
    if (cfg.epochs < 1) throw UsageError("train-relations: epochs must be >= 1");
    if (!(cfg.learning_rate > 0)) throw UsageError("train-relations: learning rate must be positive");
    if (pages.empty()) throw DataError("train-relations: no training pages");

    // Sequence-order inputs and targets are fixed for the whole run.
    std::vector<Matrix> inputs;
    std::vector<std::vector<std::size_t>> targets;
    for (const auto& page : pages) {
        const auto order = reading_order(page);
        std::vector<std::size_t> rank(order.size());
        for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
        const auto parents = page.parent_indices();
        std::vector<std::size_t> tgt(order.size());
        for (std::size_t r = 0; r < order.size(); ++r) {
            const auto& p = parents[order[r]];
            tgt[r] = p ? rank[*p] : order.size();
        }
        inputs.push_back(page_inputs(page, order, features));
        targets.push_back(std::move(tgt));
    }

    RelationTrainResult out{std::move(init), {}};
    auto& m = out.model;
    RelationParams grads = zeros_like(m.params);
    AdamConfig adam = cfg.adam;
    adam.learning_rate = cfg.learning_rate;
    Adam opt(adam, parameters(m, grads));
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(pages.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double total = 0.0;
        for (std::size_t idx : order) {
            const double loss = attention_loss_grad(inputs[idx], targets[idx], m, grads);
            if (!std::isfinite(loss))
                throw NumericError("train-relations: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                   ", page " + pages[idx].page_id);
            opt.step(parameters(m, grads));
            total += loss;
        }
        out.epoch_losses.push_back(total / static_cast<double>(pages.size()));
        spdlog::debug("relations epoch {} loss {:.6f}", epoch + 1, out.epoch_losses.back());
    }
    return out;
}

double parent_accuracy(const std::vector<corpus::Page>& pages, const RelationModel& m,
                       const corpus::FeatureConfig& features) {
    std::size_t correct = 0, total = 0;
    for (const auto& page : pages) {
        const auto pred = predict_relations(page, m, features);
        const auto gold = page.parent_indices();
        for (std::size_t i = 0; i < gold.size(); ++i) {
            correct += pred[i] == gold[i];
            ++total;
        }
    }
    return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

Checkpoint to_checkpoint(const RelationModel& m, const nlohmann::json& meta) {
    Checkpoint c;
    c.type = "relation";
    c.meta = meta;
    const auto& cfg = m.config;
    c.meta["relation"] = {{"input_dim", cfg.input_dim}, {"d_model", cfg.d_model},   {"heads", cfg.heads},
                          {"ff_dim", cfg.ff_dim},       {"max_len", cfg.max_len},   {"layer_norm_eps", cfg.layer_norm_eps}};
    for (const auto& [name, field] : kRelationFields) c.add(name, m.params.*field);
    return c;
}

RelationModel relation_from_checkpoint(const Checkpoint& c) {
    if (c.type != "relation") throw DataError("expected a relation checkpoint, got '" + c.type + "'");
    const auto& r = c.meta.at("relation");
    RelationModel m;
    m.config.input_dim = r.at("input_dim").get<int>();
    m.config.d_model = r.at("d_model").get<int>();
    m.config.heads = r.at("heads").get<int>();
    m.config.ff_dim = r.at("ff_dim").get<int>();
    m.config.max_len = r.at("max_len").get<int>();
    m.config.layer_norm_eps = r.at("layer_norm_eps").get<double>();
    for (const auto& [name, field] : kRelationFields) m.params.*field = c.get(name);
    return m;
}

}  // namespace docgcn::relpred
