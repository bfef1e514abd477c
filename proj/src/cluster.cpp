#include "patchcluster/cluster.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "parallel.hpp"
#include "patchcluster/error.hpp"

namespace patchcluster {

namespace {

void append_field(std::string& out, std::string_view field) {
  out += std::to_string(field.size());
  out.push_back(':');
  out += field;
}

FailureSignature signature_at(const ExecutionMatrix& matrix, std::size_t p) {
  FailureSignature sig;
  for (std::size_t t = 0; t < matrix.tests.size(); ++t) {
    const auto& o = matrix.at(p, t);
    if (o.status != Status::Pass) sig.entries.push_back({matrix.tests[t].key, o.status, o.message});
  }
  std::sort(sig.entries.begin(), sig.entries.end(),
            [](const SignatureEntry& a, const SignatureEntry& b) { return a.key < b.key; });
  return sig;
}

std::vector<std::size_t> ascending_patch_order(const ExecutionMatrix& matrix) {
  std::vector<std::size_t> order(matrix.patch_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return matrix.patch_ids[a] < matrix.patch_ids[b]; });
  return order;
}

std::string cluster_name(std::size_t index) { return "c" + std::to_string(index); }

}  // namespace

std::string FailureSignature::canonical_key() const {
  std::string key;
  for (const auto& e : entries) {
    append_field(key, e.key.suite_id);
    append_field(key, e.key.test_id);
    append_field(key, to_string(e.status));
    append_field(key, e.message);
  }
  return key;
}

FailureSignature signature_of(const ExecutionMatrix& matrix, std::string_view patch_id) {
  auto it = std::find(matrix.patch_ids.begin(), matrix.patch_ids.end(), patch_id);
  if (it == matrix.patch_ids.end()) throw Error(ErrorKind::UnknownPatch, "unknown patch " + std::string(patch_id));
  return signature_at(matrix, static_cast<std::size_t>(it - matrix.patch_ids.begin()));
}

std::vector<Cluster> cluster_patches(const ExecutionMatrix& matrix, int workers) {
  if (matrix.outcomes.size() != matrix.patch_ids.size() * matrix.tests.size()) {
    throw Error(ErrorKind::InvariantViolation, "matrix is not total");
  }
  const std::size_t n = matrix.patch_ids.size();
  std::vector<FailureSignature> sigs(n);
  std::vector<std::string> keys(n);
  detail::parallel_for(n, workers, [&](std::size_t p) {
    sigs[p] = signature_at(matrix, p);
    keys[p] = sigs[p].canonical_key();
  });

  std::vector<Cluster> clusters;
  std::unordered_map<std::string_view, std::size_t> by_key;
  for (std::size_t p : ascending_patch_order(matrix)) {
    auto [it, inserted] = by_key.emplace(keys[p], clusters.size());
    if (inserted) clusters.push_back({cluster_name(clusters.size()), std::move(sigs[p]), {}});
    clusters[it->second].members.push_back(matrix.patch_ids[p]);
  }
  return clusters;
}

std::vector<Cluster> cluster_patches_linear(const ExecutionMatrix& matrix) {
  std::vector<Cluster> clusters;
  for (std::size_t p : ascending_patch_order(matrix)) {
    FailureSignature sig = signature_at(matrix, p);
    bool placed = false;
    for (auto& c : clusters) {
      if (c.signature == sig) {
        c.members.push_back(matrix.patch_ids[p]);
        placed = true;
        break;
      }
    }
    if (!placed) clusters.push_back({cluster_name(clusters.size()), std::move(sig), {matrix.patch_ids[p]}});
  }
  return clusters;
}

}  // namespace patchcluster
