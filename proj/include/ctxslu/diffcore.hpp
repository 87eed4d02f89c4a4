#pragma once

// Dense tensors with a tape-based reverse-mode differentiator.
//
// A Graph records every operation applied to its Vars. Parameters live in a
// ParameterStore outside the graph; the graph only references them, and
// backward() reports their gradients in a GradientMap keyed by ParamId.
// A graph is single-use: after backward() it is sealed.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctxslu/rng.hpp"

namespace ctxslu::diff {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Plain row-major tensor of doubles.
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(Shape s, std::vector<double> v);
  static Tensor zeros(Shape s);
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
  std::size_t cols() const { return shape.empty() ? 1 : shape.back(); }
  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

enum class ParamId : std::size_t {};

inline std::size_t index_of(ParamId id) { return static_cast<std::size_t>(id); }

enum class Init {
  kZeros,
  kXavier,     // uniform(-r, r), r = sqrt(6 / (fan_in + fan_out))
  kLstmBias,   // zeros except the forget-gate block, which is 1.0
};

/// Named trainable tensors, in insertion order.
class ParameterStore {
 public:
  ParamId add(std::string name, Tensor value);
  ParamId add(std::string name, Shape shape, Init init, Rng& rng);

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  const std::string& name(ParamId id) const { return entries_.at(index_of(id)).name; }
  Tensor& tensor(ParamId id) { return entries_.at(index_of(id)).value; }
  const Tensor& tensor(ParamId id) const { return entries_.at(index_of(id)).value; }
  std::optional<ParamId> find(std::string_view name) const;
  /// Throws IndexError for unknown names.
  ParamId id(std::string_view name) const;
  std::vector<ParamId> ids() const;

 private:
  struct Entry {
    std::string name;
    Tensor value;
  };
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> by_name_;
};

/// Per-parameter gradients. Only parameters reached during backward appear.
class GradientMap {
 public:
  bool contains(ParamId id) const { return grads_.count(index_of(id)) != 0; }
  const std::vector<double>& at(ParamId id) const;
  std::size_t size() const { return grads_.size(); }
  bool empty() const { return grads_.empty(); }
  void accumulate(ParamId id, std::span<const double> g, double scale = 1.0);
  void add(const GradientMap& other, double scale = 1.0);
  void clear() { grads_.clear(); }
  auto begin() const { return grads_.begin(); }
  auto end() const { return grads_.end(); }

 private:
  std::map<std::size_t, std::vector<double>> grads_;
};

enum class OpKind : std::uint8_t {
  kParam,
  kConstant,
  kMatmul,
  kMatmulNT,
  kMatvec,
  kVecmat,
  kAdd,
  kSub,
  kMul,
  kScale,
  kTanh,
  kSigmoid,
  kConcat,
  kConcatCols,
  kStackRows,
  kRow,
  kSlice,
  kSoftmax,
  kSoftmaxRows,
  kSum,
  kDot,
  kEmbedding,
  kLstmStep,
  kCrossEntropy,
};

std::string_view op_name(OpKind kind);

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Graph* graph() const { return graph_; }
  std::uint32_t index() const { return index_; }
  bool valid() const { return graph_ != nullptr; }

  const Shape& shape() const;
  std::span<const double> values() const;
  double scalar() const;
  Tensor tensor() const;

 private:
  friend class Graph;
  Var(Graph* g, std::uint32_t i) : graph_(g), index_(i) {}
  Graph* graph_ = nullptr;
  std::uint32_t index_ = 0;
};

/// The computation record: an append-only list of nodes in topological order.
class Graph {
 public:
  explicit Graph(const ParameterStore& params);
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf for a stored parameter; repeated calls return the same node.
  Var param(ParamId id);
  Var param(std::string_view name);
  Var constant(Tensor value);

  /// Populates gradients for every parameter reachable from the scalar root.
  GradientMap backward(Var root);
  void backward(Var root, GradientMap& into);

  bool sealed() const { return sealed_; }
  std::size_t node_count() const { return nodes_.size(); }
  OpKind kind(Var v) const { return nodes_.at(v.index()).kind; }
  std::span<const std::uint32_t> inputs(Var v) const { return nodes_.at(v.index()).inputs; }
  const ParameterStore& params() const { return *params_; }

  // Implementation interface used by the operation functions.
  struct Node;
  using BackwardFn = std::function<void(Graph&, std::uint32_t)>;
  Var push(OpKind kind, Shape shape, std::vector<double> value,
           std::vector<std::uint32_t> inputs, BackwardFn backward);
  const Node& node(std::uint32_t i) const { return nodes_[i]; }
  std::span<const double> value(std::uint32_t i) const;
  std::span<double> grad(std::uint32_t i);
  std::span<const double> grad_view(std::uint32_t i) const { return nodes_[i].grad; }
  std::vector<double>& saved(std::uint32_t i) { return nodes_[i].saved; }
  bool requires_grad(std::uint32_t i) const { return nodes_[i].requires_grad; }
  void check_open() const;

  struct Node {
    OpKind kind;
    Shape shape;
    std::vector<double> value;
    const double* external = nullptr;  // parameter leaves alias the store
    std::size_t size = 0;
    std::vector<std::uint32_t> inputs;
    std::vector<double> saved;
    std::vector<double> grad;
    BackwardFn backward;
    std::optional<ParamId> param;
    bool requires_grad = false;
  };

 private:
  const ParameterStore* params_;
  std::vector<Node> nodes_;
  std::unordered_map<std::size_t, std::uint32_t> param_nodes_;
  bool sealed_ = false;
};

// ---- operations ----------------------------------------------------------
// Vectors have shape {n}, matrices {rows, cols}, scalars {}.

Var matmul(Var a, Var b);          // [m,k] x [k,n] -> [m,n]
Var matmul_nt(Var a, Var b);       // [m,k] x [n,k]^T -> [m,n]
Var matvec(Var w, Var x);          // [m,n] x [n] -> [m]
Var vecmat(Var x, Var w);          // [m] x [m,n] -> [n]
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);             // elementwise
Var scale(Var a, double factor);
Var tanh(Var a);
Var sigmoid(Var a);
Var concat(std::span<const Var> parts);          // vectors -> vector
Var concat(std::initializer_list<Var> parts);
Var concat_cols(Var a, Var b);                   // [m,p],[m,q] -> [m,p+q]
Var stack_rows(std::span<const Var> rows);       // n x [d] -> [n,d]
Var row(Var m, std::size_t r);
Var slice(Var v, std::size_t begin, std::size_t end);
Var softmax(Var v);
Var softmax_rows(Var m);
Var sum(Var a);
Var dot(Var a, Var b);
Var embedding_lookup(Var table, std::size_t index);
/// -log(max(probs[gold], 1e-12)).
Var cross_entropy(Var probs, std::size_t gold);

inline constexpr double kProbabilityFloor = 1e-12;

/// LSTM parameters as graph leaves. Gate blocks are ordered
/// [input, forget, cell, output] along the 4*hidden axis.
struct LstmParams {
  Var input_weights;      // [4H, d_in]
  Var recurrent_weights;  // [4H, H]
  Var biases;             // [4H]
  std::size_t hidden_size = 0;
};

struct LstmState {
  Var h;
  Var c;
};

LstmState lstm_step(const LstmParams& params, Var input, const LstmState& state);

/// Names used for LSTM parameters under a prefix: <prefix>.Wx, .Wh, .b
void add_lstm_params(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                     std::size_t hidden, Rng& rng);
LstmParams lstm_params(Graph& g, const std::string& prefix);

// ---- finite differences ---------------------------------------------------

struct GradCheckEntry {
  std::string name;
  std::size_t checked = 0;
  std::size_t total = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_autodiff = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  std::size_t scalars_checked = 0;
  bool passed(double tol) const { return max_rel_error < tol; }
};

struct GradCheckOptions {
  double eps = 1e-5;
  /// 0 checks every scalar. Otherwise at most this many entries per tensor:
  /// the largest-|gradient| half plus a seeded uniform sample of the rest.
  std::size_t max_entries_per_tensor = 0;
  /// With a limit, take only the largest-|gradient| entries. Central
  /// differences cannot resolve gradients far below ulp(loss) / eps, so this
  /// is the informative choice for big losses.
  bool largest_only = false;
  std::uint64_t seed = 0;
};

using LossFn = std::function<Var(Graph&)>;
/// A loss given as terms to be added. The numeric side adds them in long
/// double so that rounding of a large total does not swamp small gradients.
using LossTermsFn = std::function<std::vector<Var>(Graph&)>;

/// Compares autodiff gradients with central differences
/// (loss(t+eps) - loss(t-eps)) / (2 eps) per scalar parameter. The relative
/// error denominator is max(|g_ad|, |g_fd|, 1e-8). `params` is perturbed in
/// place and restored before returning.
GradCheckReport finite_diff_check(const LossFn& loss_fn, ParameterStore& params,
                                  const GradCheckOptions& options = {});
GradCheckReport finite_diff_check(const LossTermsFn& terms_fn, ParameterStore& params,
                                  const GradCheckOptions& options = {});

}  // namespace ctxslu::diff
