#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "edmq/divergence.hpp"
#include "edmq/error.hpp"
#include "edmq/grid.hpp"

namespace edmq {

/// Recursive dyadic partition with labeled leaves.
///
/// Nodes live in one arena. The 2^d children of an internal node occupy
/// consecutive slots starting at `first_child`; child q covers, on axis k
/// (0-based), the upper half iff bit (d-1-k) of q is set, i.e. q's binary
/// digits q_1 q_2 ... q_d select the half on axes 1..d with q_1 most
/// significant.
class RdpTree {
 public:
  struct Node {
    bool leaf = true;
    Label label = 0;
    std::uint32_t first_child = 0;

    friend bool operator==(const Node&, const Node&) = default;
  };

  RdpTree() = default;

  std::size_t dimension() const noexcept { return dim_; }
  std::size_t max_depth() const noexcept { return depth_; }
  std::size_t levels() const noexcept { return levels_; }
  std::size_t fanout() const noexcept { return std::size_t{1} << dim_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& root() const { return nodes_.front(); }
  const Node& child(const Node& n, std::size_t q) const { return nodes_[n.first_child + q]; }

  std::size_t leaf_count() const noexcept {
    std::size_t n = 0;
    for (const auto& node : nodes_) n += node.leaf ? 1 : 0;
    return n;
  }

  /// Depth of the deepest leaf.
  std::size_t height() const { return height_of(0); }

  /// True when no internal node has only leaf children sharing one label.
  bool is_minimal() const {
    for (const auto& node : nodes_) {
      if (node.leaf) continue;
      bool all_same = true;
      for (std::size_t q = 0; q < fanout(); ++q) {
        const Node& c = child(node, q);
        if (!c.leaf || c.label != child(node, 0).label) {
          all_same = false;
          break;
        }
      }
      if (all_same) return false;
    }
    return true;
  }

  friend bool operator==(const RdpTree&, const RdpTree&) = default;

 private:
  friend RdpTree build_minimal_rdp(const GridSpec&, std::span<const Label>, std::size_t);
  friend RdpTree deserialize_rdp(std::span<const std::uint8_t>);

  std::size_t height_of(std::size_t index) const {
    const Node& n = nodes_[index];
    if (n.leaf) return 0;
    std::size_t h = 0;
    for (std::size_t q = 0; q < fanout(); ++q) h = std::max(h, height_of(n.first_child + q));
    return h + 1;
  }

  std::uint32_t allocate_children() {
    const auto first = static_cast<std::uint32_t>(nodes_.size());
    nodes_.resize(nodes_.size() + fanout());
    return first;
  }

  std::size_t dim_ = 1;
  std::size_t depth_ = 0;
  std::size_t levels_ = 1;
  std::vector<Node> nodes_{Node{}};
};

namespace detail {

struct RdpBuilder {
  const GridSpec& grid;
  std::span<const Label> labels;

  // Cell-space origin (per-axis index at the finest level) and side length
  // of the hypercube being examined.
  std::optional<Label> uniform_label(std::span<const std::size_t> origin, std::size_t side) const {
    const std::size_t d = grid.dimension;
    std::vector<std::size_t> offset(d, 0);
    std::vector<std::size_t> idx(d);
    std::optional<Label> first;
    for (;;) {
      for (std::size_t k = 0; k < d; ++k) idx[k] = origin[k] + offset[k];
      const Label l = labels[grid.flat_index(idx)];
      if (!first) first = l;
      else if (*first != l) return std::nullopt;
      std::size_t k = 0;
      for (; k < d; ++k) {
        if (++offset[k] < side) break;
        offset[k] = 0;
      }
      if (k == d) return first;
    }
  }
};

}  // namespace detail

/// Minimal RDP reproducing `labels` on `grid`: a hypercube is split only when
/// the finest cells it contains do not all share one label.
inline RdpTree build_minimal_rdp(const GridSpec& grid, std::span<const Label> labels, std::size_t levels) {
  grid.validate();
  if (labels.size() != grid.cell_count())
    throw Error(ErrorKind::incompatible_grid, "labeling length does not match the grid");
  if (levels == 0) throw Error(ErrorKind::invalid_argument, "levels must be >= 1");
  for (Label l : labels)
    if (l >= levels) throw Error(ErrorKind::invalid_argument, "label out of range");

  RdpTree tree;
  tree.dim_ = grid.dimension;
  tree.depth_ = grid.depth;
  tree.levels_ = levels;
  const detail::RdpBuilder builder{grid, labels};
  const std::size_t d = grid.dimension;

  auto build = [&](auto&& self, std::size_t index, std::vector<std::size_t> origin, std::size_t level) -> void {
    const std::size_t side = std::size_t{1} << (grid.depth - level);
    if (auto l = builder.uniform_label(origin, side)) {
      tree.nodes_[index] = {true, *l, 0};
      return;
    }
    const std::uint32_t first = tree.allocate_children();
    tree.nodes_[index] = {false, 0, first};
    const std::size_t half = side / 2;
    for (std::size_t q = 0; q < tree.fanout(); ++q) {
      std::vector<std::size_t> child_origin = origin;
      for (std::size_t k = 0; k < d; ++k)
        if ((q >> (d - 1 - k)) & 1U) child_origin[k] += half;
      self(self, first + q, std::move(child_origin), level + 1);
    }
  };
  build(build, 0, std::vector<std::size_t>(d, 0), 0);
  return tree;
}

/// Expands the leaves back onto the finest cells.
inline Labeling to_labeling(const RdpTree& tree, const GridSpec& grid) {
  grid.validate();
  if (grid.dimension != tree.dimension() || grid.depth != tree.max_depth())
    throw Error(ErrorKind::incompatible_grid, "tree and grid disagree on dimension or depth");
  Labeling out(grid.cell_count());
  const std::size_t d = grid.dimension;

  auto fill = [&](auto&& self, const RdpTree::Node& node, std::vector<std::size_t> origin, std::size_t level) -> void {
    const std::size_t side = std::size_t{1} << (grid.depth - level);
    if (node.leaf) {
      std::vector<std::size_t> offset(d, 0), idx(d);
      for (;;) {
        for (std::size_t k = 0; k < d; ++k) idx[k] = origin[k] + offset[k];
        out[grid.flat_index(idx)] = node.label;
        std::size_t k = 0;
        for (; k < d; ++k) {
          if (++offset[k] < side) break;
          offset[k] = 0;
        }
        if (k == d) return;
      }
    }
    if (level >= grid.depth) throw Error(ErrorKind::incompatible_grid, "tree is deeper than the grid");
    const std::size_t half = side / 2;
    for (std::size_t q = 0; q < tree.fanout(); ++q) {
      std::vector<std::size_t> child_origin = origin;
      for (std::size_t k = 0; k < d; ++k)
        if ((q >> (d - 1 - k)) & 1U) child_origin[k] += half;
      self(self, tree.child(node, q), std::move(child_origin), level + 1);
    }
  };
  fill(fill, tree.root(), std::vector<std::size_t>(d, 0), 0);
  return out;
}

/// Label of `point` by descending the tree; nullopt outside the box.
inline std::optional<Label> quantize(const RdpTree& tree, const GridSpec& grid, std::span<const double> point) {
  if (grid.dimension != tree.dimension() || grid.depth != tree.max_depth())
    throw Error(ErrorKind::incompatible_grid, "tree and grid disagree on dimension or depth");
  if (point.size() != grid.dimension) throw Error(ErrorKind::invalid_argument, "point dimension mismatch");
  const std::size_t d = grid.dimension;
  std::array<std::size_t, GridSpec::max_index_bits> bins{};
  for (std::size_t k = 0; k < d; ++k) {
    const auto b = grid.axis_bin(k, point[k]);
    if (!b) return std::nullopt;
    bins[k] = *b;
  }
  const RdpTree::Node* node = &tree.root();
  for (std::size_t level = 0; !node->leaf; ++level) {
    std::size_t q = 0;
    for (std::size_t k = 0; k < d; ++k) q = (q << 1) | ((bins[k] >> (grid.depth - 1 - level)) & 1U);
    node = &tree.child(*node, q);
  }
  return node->label;
}

inline constexpr std::string_view rdp_magic = "RDP1";

/// Preorder encoding:
///   "RDP1" | d:u32le | J:u32le | L:u32le | nodes...
/// where each node is a tag byte (1 internal, 0 leaf) and a leaf is followed
/// by its label as u16le.
inline std::vector<std::uint8_t> serialize_rdp(const RdpTree& tree) {
  if (tree.levels() > 65536) throw Error(ErrorKind::invalid_argument, "labels do not fit the 16-bit format");
  std::vector<std::uint8_t> out(rdp_magic.begin(), rdp_magic.end());
  auto put32 = [&](std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
  };
  put32(static_cast<std::uint32_t>(tree.dimension()));
  put32(static_cast<std::uint32_t>(tree.max_depth()));
  put32(static_cast<std::uint32_t>(tree.levels()));
  auto emit = [&](auto&& self, const RdpTree::Node& node) -> void {
    if (node.leaf) {
      out.push_back(0);
      out.push_back(static_cast<std::uint8_t>(node.label & 0xFF));
      out.push_back(static_cast<std::uint8_t>(node.label >> 8));
      return;
    }
    out.push_back(1);
    for (std::size_t q = 0; q < tree.fanout(); ++q) self(self, tree.child(node, q));
  };
  emit(emit, tree.root());
  return out;
}

inline RdpTree deserialize_rdp(std::span<const std::uint8_t> bytes) {
  auto malformed = [](const char* why) { return Error(ErrorKind::malformed_file, why); };
  if (bytes.size() < 16) throw malformed("truncated header");
  if (!std::equal(rdp_magic.begin(), rdp_magic.end(), bytes.begin())) throw malformed("bad magic");
  auto get32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[at + static_cast<std::size_t>(i)];
    return v;
  };
  const std::uint32_t d = get32(4), depth = get32(8), levels = get32(12);
  if (d == 0 || d > GridSpec::max_index_bits || static_cast<std::uint64_t>(d) * depth > GridSpec::max_index_bits)
    throw malformed("unsupported dimension or depth");
  if (levels == 0 || levels > 65536) throw malformed("level count out of range");

  RdpTree tree;
  tree.dim_ = d;
  tree.depth_ = depth;
  tree.levels_ = levels;
  std::size_t pos = 16;

  auto read = [&](auto&& self, std::size_t index, std::size_t level) -> void {
    if (pos >= bytes.size()) throw malformed("truncated node stream");
    const std::uint8_t tag = bytes[pos++];
    if (tag == 0) {
      if (bytes.size() - pos < 2) throw malformed("truncated leaf label");
      const Label label = static_cast<Label>(bytes[pos]) | (static_cast<Label>(bytes[pos + 1]) << 8);
      pos += 2;
      if (label >= levels) throw malformed("leaf label not below L");
      tree.nodes_[index] = {true, label, 0};
      return;
    }
    if (tag != 1) throw malformed("unknown node tag");
    if (level >= depth) throw malformed("internal node at maximum depth");
    // every child needs at least one byte; refuse before allocating
    if (bytes.size() - pos < tree.fanout()) throw malformed("truncated node stream");
    const std::uint32_t first = tree.allocate_children();
    tree.nodes_[index] = {false, 0, first};
    for (std::size_t q = 0; q < tree.fanout(); ++q) self(self, first + q, level + 1);
  };
  read(read, 0, 0);
  if (pos != bytes.size()) throw malformed("trailing bytes after tree");
  if (!tree.is_minimal()) throw malformed("tree is not minimal");
  return tree;
}

}  // namespace edmq
