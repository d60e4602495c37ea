#include "soupkit/tensor_map.hpp"

#include <cmath>

#include "soupkit/errors.hpp"
#include "soupkit/hash.hpp"

namespace soupkit {

void NamedTensorMap::add(std::string name, std::vector<std::size_t> shape,
                         std::vector<float> values) {
    if (name.empty()) {
        throw DomainError("tensor name must be non-empty");
    }
    if (name.find(':') != std::string::npos || name.find(';') != std::string::npos) {
        throw DomainError("tensor name must not contain ':' or ';': " + name);
    }
    if (index_.count(name)) {
        throw DomainError("duplicate tensor name: " + name);
    }
    std::size_t expected = 1;
    for (std::size_t d : shape) {
        if (d == 0) {
            throw DomainError("tensor shape entries must be positive: " + name);
        }
        expected *= d;
    }
    if (values.size() != expected) {
        throw DomainError("tensor '" + name + "' has " + std::to_string(values.size()) +
                          " values, shape wants " + std::to_string(expected));
    }
    for (float v : values) {
        if (!std::isfinite(v)) {
            throw ValidityError("tensor '" + name + "' contains a non-finite value");
        }
    }
    index_.emplace(name, entries_.size());
    entries_.push_back(TensorEntry{std::move(name), std::move(shape), std::move(values)});
}

const TensorEntry& NamedTensorMap::at(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) {
        throw DomainError("no tensor named '" + std::string(name) + "'");
    }
    return entries_[it->second];
}

std::span<float> NamedTensorMap::values_mut(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) {
        throw DomainError("no tensor named '" + std::string(name) + "'");
    }
    return entries_[it->second].values;
}

ArchSignature arch_signature(const NamedTensorMap& tensors) {
    std::string canonical;
    bool first = true;
    for (const TensorEntry& t : tensors) {
        if (!first) canonical += ';';
        first = false;
        canonical += t.name;
        canonical += ":f32:";
        for (std::size_t i = 0; i < t.shape.size(); ++i) {
            if (i) canonical += 'x';
            canonical += std::to_string(t.shape[i]);
        }
    }
    const std::uint64_t hash = fnv1a64(canonical);
    return ArchSignature{std::move(canonical), hash};
}

}  // namespace soupkit
