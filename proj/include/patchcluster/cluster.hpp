#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "patchcluster/matrix.hpp"

namespace patchcluster {

struct SignatureEntry {
  TestKey key;
  Status status;
  std::string message;

  friend bool operator==(const SignatureEntry&, const SignatureEntry&) = default;
};

/// Non-passing outcomes of one patch, sorted by test key. Empty iff the
/// patch passes every generated test.
struct FailureSignature {
  std::vector<SignatureEntry> entries;

  bool empty() const { return entries.empty(); }
  /// Unambiguous byte encoding; equal signatures have equal keys.
  std::string canonical_key() const;

  friend bool operator==(const FailureSignature&, const FailureSignature&) = default;
};

struct Cluster {
  std::string cluster_id;
  FailureSignature signature;
  std::vector<std::string> members;  // ascending
};

/// Throws UnknownPatch.
FailureSignature signature_of(const ExecutionMatrix& matrix, std::string_view patch_id);

/// Groups patches by hashed signature. Signatures are computed in parallel
/// when workers > 1; the grouping itself is sequential in ascending patch
/// order, which fixes cluster ids.
std::vector<Cluster> cluster_patches(const ExecutionMatrix& matrix, int workers = 1);

/// Reference: linear scan comparing each patch against one member of every
/// existing cluster.
std::vector<Cluster> cluster_patches_linear(const ExecutionMatrix& matrix);

}  // namespace patchcluster
