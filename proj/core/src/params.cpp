// SPDX-License-Identifier: Apache-2.0
#include "cef/params.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace cef {

std::size_t ParamStore::add(std::string name, int d_out, int d_in, Rng& rng) {
  if (d_out <= 0 || d_in <= 0) {
    throw ShapeError("parameter group '" + name + "' needs positive dimensions");
  }
  ParamGroup g{std::move(name), Matrix(d_out, d_in), Vector::Zero(d_out)};
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_in));
  for (int r = 0; r < d_out; ++r) {
    for (int c = 0; c < d_in; ++c) {
      g.weights(r, c) = rng.uniform(-bound, bound);
    }
  }
  return add(std::move(g));
}

std::size_t ParamStore::add(ParamGroup group) {
  if (group.bias.size() != group.weights.rows()) {
    throw ShapeError("parameter group '" + group.name + "': bias length does not match weights");
  }
  if (!group.weights.allFinite() || !group.bias.allFinite()) {
    throw DomainError("parameter group '" + group.name + "' has non-finite entries");
  }
  if (index_.contains(group.name)) {
    throw ContractError("duplicate parameter group '" + group.name + "'");
  }
  const std::size_t i = groups_.size();
  index_.emplace(group.name, i);
  groups_.push_back(std::move(group));
  return i;
}

std::size_t ParamStore::index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw ContractError("unknown parameter group '" + std::string(name) + "'");
  }
  return it->second;
}

bool ParamStore::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& g : groups_) {
    n += static_cast<std::size_t>(g.weights.size() + g.bias.size());
  }
  return n;
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.size() != b.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.groups_[i];
    const auto& y = b.groups_[i];
    if (x.name != y.name || x.weights.rows() != y.weights.rows() ||
        x.weights.cols() != y.weights.cols() || x.weights != y.weights || x.bias != y.bias) {
      return false;
    }
  }
  return true;
}

Gradients Gradients::zeros_like(const ParamStore& store) {
  Gradients g;
  g.weights.reserve(store.size());
  g.bias.reserve(store.size());
  for (const auto& p : store) {
    g.weights.push_back(Matrix::Zero(p.weights.rows(), p.weights.cols()));
    g.bias.push_back(Vector::Zero(p.bias.size()));
  }
  return g;
}

double Gradients::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weights) {
    s += w.squaredNorm();
  }
  for (const auto& b : bias) {
    s += b.squaredNorm();
  }
  return s;
}

void Gradients::scale(double factor) {
  for (auto& w : weights) {
    w *= factor;
  }
  for (auto& b : bias) {
    b *= factor;
  }
}

namespace {

void write_value(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf << '\n';
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParamStore& store) {
  out << "cef-params 1\n" << store.size() << '\n';
  for (const auto& g : store) {
    out << g.name << ' ' << g.weights.rows() << ' ' << g.weights.cols() << '\n';
    for (Eigen::Index r = 0; r < g.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < g.weights.cols(); ++c) {
        write_value(out, g.weights(r, c));
      }
    }
    for (Eigen::Index r = 0; r < g.bias.size(); ++r) {
      write_value(out, g.bias(r));
    }
  }
}

ParamStore read_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version) || magic != "cef-params" || version != 1) {
    throw ContractError("not a cef-params version 1 checkpoint");
  }
  if (!(in >> count)) {
    throw ContractError("checkpoint: missing group count");
  }
  ParamStore store;
  for (std::size_t i = 0; i < count; ++i) {
    ParamGroup g;
    int rows = 0;
    int cols = 0;
    if (!(in >> g.name >> rows >> cols) || rows <= 0 || cols <= 0) {
      throw ContractError("checkpoint: bad header for group " + std::to_string(i));
    }
    g.weights.resize(rows, cols);
    g.bias.resize(rows);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        if (!(in >> g.weights(r, c))) {
          throw ContractError("checkpoint: truncated weights in '" + g.name + "'");
        }
      }
    }
    for (int r = 0; r < rows; ++r) {
      if (!(in >> g.bias(r))) {
        throw ContractError("checkpoint: truncated bias in '" + g.name + "'");
      }
    }
    store.add(std::move(g));
  }
  return store;
}

void save_checkpoint(const std::string& path, const ParamStore& store) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write checkpoint " + path);
  }
  write_checkpoint(out, store);
}

ParamStore load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open checkpoint " + path);
  }
  return read_checkpoint(in);
}

}  // namespace cef
