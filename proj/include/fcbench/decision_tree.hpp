#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <queue>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fcb {

struct LabeledExample {
  std::string_view key;
  std::span<const double> features;
  bool positive = false;
};

struct TreeNode {
  bool leaf = true;
  std::uint16_t feature = 0;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double score = 0.0;
};

// Binary classification tree over real-valued features; x[f] <= threshold
// descends left. Nodes are stored in preorder.
//
// Canonical serialization (little-endian), which also defines the model's
// size in the learned filters' space budget:
//   header   16 bytes  "FCT1", u32 node count, u32 feature dim, u32 leaf count
//   internal 19 bytes  u8 tag=1, u16 feature, f64 threshold, u32 left, u32 right
//   leaf      9 bytes  u8 tag=2, f64 score
class DecisionTree {
 public:
  static constexpr std::size_t kHeaderBytes = 16;
  static constexpr std::size_t kInternalBytes = 19;
  static constexpr std::size_t kLeafBytes = 9;

  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, std::size_t feature_dim) : nodes_(std::move(nodes)), dim_(feature_dim) {
    if (nodes_.empty()) throw std::invalid_argument("decision tree needs at least one node");
  }

  std::size_t feature_dim() const noexcept { return dim_; }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

  std::size_t leaf_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.leaf; }));
  }
  std::size_t internal_count() const noexcept { return nodes_.size() - leaf_count(); }

  // Index of the leaf reached by `fv`.
  std::size_t leaf_index(std::span<const double> fv) const {
    if (fv.size() != dim_) {
      throw std::invalid_argument("feature vector has length " + std::to_string(fv.size()) + ", tree expects " +
                                  std::to_string(dim_));
    }
    std::size_t i = 0;
    while (!nodes_[i].leaf) i = fv[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
    return i;
  }

  double score(std::span<const double> fv) const { return nodes_[leaf_index(fv)].score; }

  std::size_t size_bytes() const noexcept {
    return kHeaderBytes + kInternalBytes * internal_count() + kLeafBytes * leaf_count();
  }

  std::string serialize() const {
    std::string out;
    out.reserve(size_bytes());
    out.append("FCT1");
    put_u32(out, static_cast<std::uint32_t>(nodes_.size()));
    put_u32(out, static_cast<std::uint32_t>(dim_));
    put_u32(out, static_cast<std::uint32_t>(leaf_count()));
    for (const auto& n : nodes_) {
      if (n.leaf) {
        out.push_back(2);
        put_f64(out, n.score);
      } else {
        out.push_back(1);
        put_u16(out, n.feature);
        put_f64(out, n.threshold);
        put_u32(out, n.left);
        put_u32(out, n.right);
      }
    }
    return out;
  }

  static DecisionTree deserialize(std::string_view bytes) {
    if (bytes.size() < kHeaderBytes || bytes.substr(0, 4) != "FCT1") throw std::invalid_argument("not an FCT1 model");
    std::size_t pos = 4;
    const auto count = get_u32(bytes, pos);
    const auto dim = get_u32(bytes, pos);
    const auto leaves = get_u32(bytes, pos);
    std::vector<TreeNode> nodes(count);
    for (auto& n : nodes) {
      if (pos >= bytes.size()) throw std::invalid_argument("truncated FCT1 model");
      const auto tag = static_cast<unsigned char>(bytes[pos++]);
      if (tag == 2) {
        n.leaf = true;
        n.score = get_f64(bytes, pos);
      } else if (tag == 1) {
        n.leaf = false;
        n.feature = get_u16(bytes, pos);
        n.threshold = get_f64(bytes, pos);
        n.left = get_u32(bytes, pos);
        n.right = get_u32(bytes, pos);
        if (n.left >= count || n.right >= count || n.feature >= dim) throw std::invalid_argument("corrupt FCT1 node");
      } else {
        throw std::invalid_argument("bad FCT1 node tag");
      }
    }
    if (pos != bytes.size()) throw std::invalid_argument("trailing bytes after FCT1 model");
    DecisionTree t(std::move(nodes), dim);
    if (t.leaf_count() != leaves) throw std::invalid_argument("FCT1 leaf count mismatch");
    return t;
  }

 private:
  static_assert(std::endian::native == std::endian::little, "FCT1 encoding assumes a little-endian host");

  template <typename T>
  static void put_raw(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
  }
  static void put_u16(std::string& out, std::uint16_t v) { put_raw(out, v); }
  static void put_u32(std::string& out, std::uint32_t v) { put_raw(out, v); }
  static void put_f64(std::string& out, double v) { put_raw(out, v); }

  template <typename T>
  static T get_raw(std::string_view in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw std::invalid_argument("truncated FCT1 model");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  static std::uint16_t get_u16(std::string_view in, std::size_t& pos) { return get_raw<std::uint16_t>(in, pos); }
  static std::uint32_t get_u32(std::string_view in, std::size_t& pos) { return get_raw<std::uint32_t>(in, pos); }
  static double get_f64(std::string_view in, std::size_t& pos) { return get_raw<double>(in, pos); }

  std::vector<TreeNode> nodes_;
  std::size_t dim_ = 0;
};

namespace detail {

inline double gini(double pos, double neg) {
  const double n = pos + neg;
  if (n == 0) return 0.0;
  const double p = pos / n, q = neg / n;
  return 1.0 - p * p - q * q;
}

struct SplitChoice {
  bool valid = false;
  std::uint16_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

struct GrowingNode {
  std::vector<std::uint32_t> rows;
  std::size_t pos = 0;
  std::size_t neg = 0;
  SplitChoice split;
  int left = -1;
  int right = -1;
};

class TreeTrainer {
 public:
  TreeTrainer(std::span<const LabeledExample> train, std::uint64_t seed) : train_(train) {
    dim_ = train.front().features.size();
    for (const auto& ex : train) {
      if (ex.features.size() != dim_) throw std::invalid_argument("training examples have inconsistent dimensions");
    }
    order_.resize(dim_);
    std::iota(order_.begin(), order_.end(), std::uint16_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order_.begin(), order_.end(), rng);
  }

  DecisionTree grow(std::size_t max_leaf_nodes) {
    GrowingNode root;
    root.rows.resize(train_.size());
    std::iota(root.rows.begin(), root.rows.end(), 0u);
    count(root);
    root.split = best_split(root);
    nodes_.push_back(std::move(root));

    // Best-first: always expand the leaf whose split removes the most
    // weighted Gini impurity; ties go to the older node.
    auto cmp = [this](int a, int b) {
      const double ga = nodes_[a].split.gain, gb = nodes_[b].split.gain;
      return ga != gb ? ga < gb : a > b;
    };
    std::priority_queue<int, std::vector<int>, decltype(cmp)> frontier(cmp);
    if (nodes_[0].split.valid) frontier.push(0);

    std::size_t leaves = 1;
    while (leaves < max_leaf_nodes && !frontier.empty()) {
      const int id = frontier.top();
      frontier.pop();
      GrowingNode left, right;
      const auto& split = nodes_[id].split;
      for (auto row : nodes_[id].rows) {
        (train_[row].features[split.feature] <= split.threshold ? left : right).rows.push_back(row);
      }
      count(left);
      count(right);
      left.split = best_split(left);
      right.split = best_split(right);
      nodes_[id].rows.clear();
      nodes_[id].rows.shrink_to_fit();
      const int l = static_cast<int>(nodes_.size());
      nodes_.push_back(std::move(left));
      nodes_.push_back(std::move(right));
      nodes_[id].left = l;
      nodes_[id].right = l + 1;
      if (nodes_[l].split.valid) frontier.push(l);
      if (nodes_[l + 1].split.valid) frontier.push(l + 1);
      ++leaves;
    }

    std::vector<TreeNode> out;
    out.reserve(nodes_.size());
    emit_preorder(0, out);
    return DecisionTree(std::move(out), dim_);
  }

 private:
  void count(GrowingNode& n) const {
    n.pos = 0;
    for (auto row : n.rows) n.pos += train_[row].positive;
    n.neg = n.rows.size() - n.pos;
  }

  SplitChoice best_split(const GrowingNode& node) const {
    SplitChoice best;
    if (node.pos == 0 || node.neg == 0) return best;
    const double total = static_cast<double>(node.rows.size());
    const double parent = total * gini(static_cast<double>(node.pos), static_cast<double>(node.neg));
    std::vector<std::pair<double, bool>> vals(node.rows.size());
    for (auto f : order_) {
      for (std::size_t i = 0; i < node.rows.size(); ++i) {
        const auto& ex = train_[node.rows[i]];
        vals[i] = {ex.features[f], ex.positive};
      }
      std::sort(vals.begin(), vals.end());
      double lp = 0, ln = 0;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        (vals[i].second ? lp : ln) += 1;
        if (vals[i].first == vals[i + 1].first) continue;
        const double rp = static_cast<double>(node.pos) - lp, rn = static_cast<double>(node.neg) - ln;
        const double gain = parent - (lp + ln) * gini(lp, ln) - (rp + rn) * gini(rp, rn);
        if (gain > best.gain + 1e-12) {
          double thr = vals[i].first + (vals[i + 1].first - vals[i].first) / 2;
          if (!(thr < vals[i + 1].first)) thr = vals[i].first;
          best = {true, f, thr, gain};
        }
      }
    }
    return best;
  }

  std::uint32_t emit_preorder(int id, std::vector<TreeNode>& out) const {
    const auto& n = nodes_[id];
    const auto index = static_cast<std::uint32_t>(out.size());
    out.emplace_back();
    if (n.left < 0) {
      out[index].leaf = true;
      out[index].score = (static_cast<double>(n.pos) + 1.0) / (static_cast<double>(n.pos + n.neg) + 2.0);
      return index;
    }
    out[index].leaf = false;
    out[index].feature = n.split.feature;
    out[index].threshold = n.split.threshold;
    const auto l = emit_preorder(n.left, out);
    const auto r = emit_preorder(n.right, out);
    out[index].left = l;
    out[index].right = r;
    return index;
  }

  std::span<const LabeledExample> train_;
  std::size_t dim_ = 0;
  std::vector<std::uint16_t> order_;
  std::vector<GrowingNode> nodes_;
};

}  // namespace detail

// Best-first Gini tree with at most `max_leaf_nodes` leaves and Laplace
// leaf scores (pos + 1) / (pos + neg + 2). The seed only permutes the order
// features are scanned in, which decides ties between equal-gain splits.
inline DecisionTree train_decision_tree(std::span<const LabeledExample> train, std::size_t max_leaf_nodes,
                                        std::uint64_t seed) {
  if (train.empty()) throw std::invalid_argument("cannot train a decision tree on an empty training set");
  if (train.front().features.size() > 0xffff) throw std::invalid_argument("too many features");
  return detail::TreeTrainer(train, seed).grow(std::max<std::size_t>(max_leaf_nodes, 1));
}

}  // namespace fcb
