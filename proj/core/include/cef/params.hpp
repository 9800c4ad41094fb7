// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cef/numerics.hpp"
#include "cef/rng.hpp"

namespace cef {

/// Ordered collection of named parameter groups. Insertion order is the
/// canonical order used by gradients, optimizer state and checkpoints.
class ParamStore {
 public:
  /// Adds a group with weights ~ U(-1/sqrt(d_in), 1/sqrt(d_in)) and zero bias.
  std::size_t add(std::string name, int d_out, int d_in, Rng& rng);
  /// Adds a group with explicit values.
  std::size_t add(ParamGroup group);

  [[nodiscard]] std::size_t index(std::string_view name) const;
  [[nodiscard]] bool contains(std::string_view name) const;

  [[nodiscard]] const ParamGroup& operator[](std::size_t i) const { return groups_[i]; }
  ParamGroup& operator[](std::size_t i) { return groups_[i]; }
  [[nodiscard]] const ParamGroup& at(std::string_view name) const { return groups_[index(name)]; }
  ParamGroup& at(std::string_view name) { return groups_[index(name)]; }

  [[nodiscard]] std::size_t size() const { return groups_.size(); }
  [[nodiscard]] std::size_t scalar_count() const;
  [[nodiscard]] auto begin() const { return groups_.begin(); }
  [[nodiscard]] auto end() const { return groups_.end(); }

  /// Bitwise equality of names, shapes and values.
  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  std::vector<ParamGroup> groups_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Per-group gradients laid out like a ParamStore.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;

  static Gradients zeros_like(const ParamStore& store);
  [[nodiscard]] double squared_norm() const;
  void scale(double factor);
};

// Checkpoint text format:
//   cef-params 1
//   <group count>
//   then per group: `<name> <d_out> <d_in>` followed by d_out*d_in weights
//   (row-major) and d_out bias values, one per line, printed with %.17g.
void write_checkpoint(std::ostream& out, const ParamStore& store);
ParamStore read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const ParamStore& store);
ParamStore load_checkpoint(const std::string& path);

}  // namespace cef
