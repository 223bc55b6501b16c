#pragma once

#include <cstdint>
#include <string>

#include "gerbes/holonomy.hpp"

namespace gerbes {

/// Registry of loaded objects keyed by canonical path, so cross-references
/// between files resolve to shared instances. Provenance (path + content
/// hash) is recorded per object.
class Workspace {
public:
  struct Provenance {
    std::string path;
    std::uint64_t hash = 0;
  };

  PosetPtr poset(const std::string& path);
  GroupPtr group(const std::string& path);
  CrossedModulePtr crossed_module(const std::string& path);
  Cocycle1 cocycle1(const std::string& path);
  NonAbCocycle2 cocycle2(const std::string& path);
  Gerbe gerbe(const std::string& path);
  TwistedSystem system(const std::string& path);
  FixedAlgebraBundle bundle(const std::string& path);
  ReconstructionEnv env(const std::string& path);

  const std::map<std::string, Provenance>& provenance() const { return prov_; }

private:
  std::string canonical(const std::string& path);
  void record(const std::string& key, const std::string& path, const std::string& content);

  std::map<std::string, PosetPtr> posets_;
  std::map<std::string, GroupPtr> groups_;
  std::map<std::string, CrossedModulePtr> cms_;
  std::map<std::string, Provenance> prov_;
};

std::uint64_t fnv1a(const std::string& data);

/// Serialize a twisted system (finite Pi, or free Pi with trivial gamma on a
/// sample) into the system file format.
void write_system_file(const std::string& path, const TwistedSystem& s, int len_bound = 4);

} // namespace gerbes
