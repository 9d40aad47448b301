#include "advest/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "advest/serialize.hpp"

namespace advest {

void save_checkpoint(const std::string& path, const Trainer& trainer,
                     std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  BinaryWriter w(out);
  w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u64(config_hash);
  trainer.save_state(w);
  out.flush();
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

void load_checkpoint(const std::string& path, Trainer& trainer,
                     std::uint64_t expected_config_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  BinaryReader r(in);
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw std::runtime_error(path + " is not a checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint format version " +
                             std::to_string(version) + " unsupported");
  const std::uint64_t hash = r.u64();
  if (hash != expected_config_hash) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%016llx vs %016llx",
                  static_cast<unsigned long long>(hash),
                  static_cast<unsigned long long>(expected_config_hash));
    throw std::runtime_error(
        "refusing to resume: checkpoint config hash mismatch (" +
        std::string(buf) + ")");
  }
  trainer.load_state(r);
}

}  // namespace advest
