#ifndef ABSA_SERIALIZE_HPP_
#define ABSA_SERIALIZE_HPP_

// Model files: "ABSA", u16 version, u32-length JSON manifest, then parameter
// blobs (u32-length name, u8 rank, u32 dims, f32 values) until end of file.
// All integers and floats little-endian. Values are stored as 32-bit floats
// and widened on load, so save -> load -> save is byte-identical.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "absa/ian_model.hpp"
#include "absa/ote_model.hpp"

namespace absa {

inline constexpr std::uint16_t kModelFormatVersion = 1;

enum class Task { ote, polarity };

std::string_view to_string(Task t);
/// Throws ConfigError for anything but "ote" / "polarity".
Task parse_task(std::string_view s);

struct ParameterBlob {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

/// Raw file contents; manifest is the JSON text.
struct ModelFile {
  std::uint16_t version = kModelFormatVersion;
  std::string manifest;
  std::vector<ParameterBlob> blobs;
};

void write_model_file(std::ostream& out, const ModelFile& f);
/// Throws ParseError on bad magic, unsupported version, or truncation.
ModelFile read_model_file(std::istream& in);

ModelFile to_model_file(const OteModel& m);
ModelFile to_model_file(const IanModel& m);

using AnyModel = std::variant<OteModel, IanModel>;

/// Throws ParseError when the manifest or blobs do not describe a model.
AnyModel from_model_file(const ModelFile& f);

Task task_of(const AnyModel& m);

void save_model(std::ostream& out, const OteModel& m);
void save_model(std::ostream& out, const IanModel& m);
void save_model(const std::filesystem::path& path, const AnyModel& m);
AnyModel load_model(std::istream& in);
/// Throws ParseError naming the path when it cannot be opened.
AnyModel load_model(const std::filesystem::path& path);

}  // namespace absa

#endif  // ABSA_SERIALIZE_HPP_
