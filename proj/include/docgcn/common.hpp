#ifndef DOCGCN_COMMON_HPP
#define DOCGCN_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace docgcn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Process exit codes shared by the CLI and error types.
enum class ExitCode : int { ok = 0, usage = 1, data = 2, numeric = 3 };

/// Base for all recoverable errors raised by the library.
class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ExitCode::usage, what) {}
};

/// Bad or inconsistent input data (malformed files, missing artifacts, unknown ids).
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ExitCode::data, what) {}
};

/// Malformed record in an input file. Carries the line number and the offending field.
class ParseError : public DataError {
public:
    ParseError(std::size_t line, std::string field, const std::string& msg)
        : DataError("line " + std::to_string(line) + ": field '" + field + "': " + msg),
          line_(line), field_(std::move(field)) {}
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

/// Violated structural constraint, e.g. a cycle in parent links.
class StructuralError : public DataError {
public:
    explicit StructuralError(const std::string& what) : DataError(what) {}
};

/// Non-finite loss or parameters during training.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ExitCode::numeric, what) {}
};

/// Programming-contract violation (bad dimensions, out-of-range ids).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const char* msg) {
    if (!cond) throw ContractViolation(msg);
}

/// Deterministic random stream. The mapping from engine output to reals is
/// fixed here so results do not depend on the standard library's distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

/// Glorot-uniform initialised rows x cols matrix.
Matrix glorot(Rng& rng, Eigen::Index rows, Eigen::Index cols);
/// Uniform in [-limit, limit].
Matrix uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double limit);

bool all_finite(const Matrix& m);

/// Row-wise softmax of logits.
Matrix softmax_rows(const Matrix& logits);

/// Mean cross-entropy of softmax(logits) against integer labels; fills dlogits
/// with the gradient of the mean loss.
double softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels, Matrix* dlogits);

/// A trainable tensor and its gradient buffer.
struct Param {
    Matrix* value;
    Matrix* grad;
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction. State is bound to the parameter order given at
/// construction.
class Adam {
public:
    Adam(AdamConfig cfg, const std::vector<Param>& params);
    void step(const std::vector<Param>& params);
    long steps() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<Matrix> m_, v_;
    long t_ = 0;
};

}  // namespace docgcn

#endif  // DOCGCN_COMMON_HPP
