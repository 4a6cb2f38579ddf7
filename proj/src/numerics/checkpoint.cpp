#include "vrg/numerics/checkpoint.hpp"

#include <limits>

#include "vrg/binary_io.hpp"
#include "vrg/error.hpp"

namespace vrg::num {

std::vector<unsigned char> encode_checkpoint(const ParameterSet& params) {
  io::ByteWriter w;
  w.put_bytes("VRGW");
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.count()));
  for (const auto& name : params.names()) {
    const Tensor& t = params.get(name);
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) throw FormatError("parameter name too long");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.put_bytes(name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (double v : t.data()) w.put<double>(v);
  }
  return w.bytes();
}

ParameterSet decode_checkpoint(const std::vector<unsigned char>& bytes, const std::string& context) {
  io::ByteReader r(bytes, context);
  if (r.get_bytes(4) != "VRGW") throw FormatError(context + ": bad magic, expected VRGW");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError(context + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>();
  ParameterSet params;
  for (std::uint32_t p = 0; p < count; ++p) {
    const auto len = r.get<std::uint16_t>();
    std::string name = r.get_bytes(len);
    const auto rank = r.get<std::uint8_t>();
    std::vector<std::size_t> shape;
    std::size_t n = 1;
    for (std::uint8_t k = 0; k < rank; ++k) {
      shape.push_back(r.get<std::uint32_t>());
      n *= shape.back();
    }
    r.require(n * sizeof(double));
    std::vector<double> data(n);
    for (auto& v : data) v = r.get<double>();
    params.add(name, Tensor(std::move(shape), std::move(data)));
  }
  if (r.remaining() != 0) {
    throw FormatError(context + ": " + std::to_string(r.remaining()) + " trailing bytes after parameters");
  }
  return params;
}

void save_checkpoint(const std::string& path, const ParameterSet& params) {
  io::write_file(path, encode_checkpoint(params));
}

ParameterSet load_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path), path); }

void assign_parameters(ParameterSet& target, const ParameterSet& loaded) {
  if (target.count() != loaded.count()) {
    throw FormatError("checkpoint holds " + std::to_string(loaded.count()) + " parameters, model expects " +
                      std::to_string(target.count()));
  }
  for (const auto& name : target.names()) {
    if (!loaded.contains(name)) throw FormatError("checkpoint is missing parameter " + name);
    const Tensor& src = loaded.get(name);
    Tensor& dst = target.get(name);
    if (!src.same_shape(dst)) {
      throw FormatError("checkpoint shape " + src.shape_string() + " for " + name + " does not match model " +
                        dst.shape_string());
    }
    dst = src;
  }
}

}  // namespace vrg::num
