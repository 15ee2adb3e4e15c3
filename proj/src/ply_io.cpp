#include "dirslam/ply_io.h"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dirslam {

void write_surfel_ply(const std::string& path, const MapSnapshot& snapshot) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << snapshot.surfels.size() << "\n";
  for (const char* p : {"x", "y", "z", "nx", "ny", "nz"}) {
    out << "property float " << p << "\n";
  }
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "property uint label\nproperty float radius\n";
  out << "end_header\n";

  for (const auto& s : snapshot.surfels) {
    const float fields[6] = {static_cast<float>(s.position.x()),
                             static_cast<float>(s.position.y()),
                             static_cast<float>(s.position.z()),
                             static_cast<float>(s.normal.x()),
                             static_cast<float>(s.normal.y()),
                             static_cast<float>(s.normal.z())};
    out.write(reinterpret_cast<const char*>(fields), sizeof(fields));
    out.write(reinterpret_cast<const char*>(s.rgb.data()), 3);
    const uint32_t label = s.label < 0 ? 0xffffffffu : static_cast<uint32_t>(s.label);
    out.write(reinterpret_cast<const char*>(&label), 4);
    const auto radius = static_cast<float>(s.radius);
    out.write(reinterpret_cast<const char*>(&radius), 4);
  }
}

namespace {

struct Property {
  std::string name;
  std::string type;
};

size_t type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
      t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  throw std::runtime_error("ply: unsupported property type " + t);
}

double decode(const char* p, const std::string& t) {
  if (t == "float" || t == "float32") {
    float v;
    std::memcpy(&v, p, 4);
    return v;
  }
  if (t == "double" || t == "float64") {
    double v;
    std::memcpy(&v, p, 8);
    return v;
  }
  if (t == "uchar" || t == "uint8") return *reinterpret_cast<const uint8_t*>(p);
  if (t == "char" || t == "int8") return *reinterpret_cast<const int8_t*>(p);
  if (t == "ushort" || t == "uint16") {
    uint16_t v;
    std::memcpy(&v, p, 2);
    return v;
  }
  if (t == "short" || t == "int16") {
    int16_t v;
    std::memcpy(&v, p, 2);
    return v;
  }
  if (t == "uint" || t == "uint32") {
    uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
  }
  if (t == "int" || t == "int32") {
    int32_t v;
    std::memcpy(&v, p, 4);
    return v;
  }
  throw std::runtime_error("ply: unsupported property type " + t);
}

}  // namespace

std::vector<PlyVertex> read_ply_vertices(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
    throw std::runtime_error(path + ": not a ply file");
  }
  bool binary = false;
  bool ascii = false;
  size_t vertex_count = 0;
  std::vector<Property> props;
  bool in_vertex_element = false;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      binary = fmt == "binary_little_endian";
      ascii = fmt == "ascii";
      if (!binary && !ascii) throw std::runtime_error(path + ": unsupported ply format " + fmt);
    } else if (word == "element") {
      std::string name;
      size_t count;
      ss >> name >> count;
      in_vertex_element = name == "vertex";
      if (in_vertex_element) vertex_count = count;
    } else if (word == "property" && in_vertex_element) {
      Property p;
      ss >> p.type >> p.name;
      if (p.type == "list") throw std::runtime_error(path + ": list property on vertices");
      props.push_back(p);
    } else if (word == "end_header") {
      break;
    }
  }

  std::map<std::string, size_t> index;
  size_t stride = 0;
  std::vector<size_t> offsets;
  for (const auto& p : props) {
    index[p.name] = offsets.size();
    offsets.push_back(stride);
    stride += type_size(p.type);
  }
  auto get = [&](const std::vector<double>& row, const char* name, double fallback) {
    auto it = index.find(name);
    return it == index.end() ? fallback : row[it->second];
  };

  std::vector<PlyVertex> verts;
  verts.reserve(vertex_count);
  std::vector<char> buf(stride);
  std::vector<double> row(props.size());
  for (size_t i = 0; i < vertex_count; ++i) {
    if (binary) {
      in.read(buf.data(), static_cast<std::streamsize>(stride));
      if (!in) throw std::runtime_error(path + ": truncated vertex data");
      for (size_t k = 0; k < props.size(); ++k) {
        row[k] = decode(buf.data() + offsets[k], props[k].type);
      }
    } else {
      for (size_t k = 0; k < props.size(); ++k) {
        if (!(in >> row[k])) throw std::runtime_error(path + ": truncated vertex data");
      }
    }
    PlyVertex v;
    v.x = static_cast<float>(get(row, "x", 0));
    v.y = static_cast<float>(get(row, "y", 0));
    v.z = static_cast<float>(get(row, "z", 0));
    v.nx = static_cast<float>(get(row, "nx", 0));
    v.ny = static_cast<float>(get(row, "ny", 0));
    v.nz = static_cast<float>(get(row, "nz", 1));
    v.red = static_cast<uint8_t>(get(row, "red", 0));
    v.green = static_cast<uint8_t>(get(row, "green", 0));
    v.blue = static_cast<uint8_t>(get(row, "blue", 0));
    v.label = static_cast<uint32_t>(get(row, "label", 0));
    v.radius = static_cast<float>(get(row, "radius", 0));
    verts.push_back(v);
  }
  return verts;
}

void write_surfel_csv(const std::string& path, const MapSnapshot& snapshot) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "id,x,y,z,nx,ny,nz,label,radius,intensity,grad_mag,obs_count,sample_count,entropy\n";
  char buf[512];
  for (const auto& s : snapshot.surfels) {
    std::snprintf(buf, sizeof(buf),
                  "%u,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%.9g,%.9g,%.9g,%u,%u,%.9g\n", s.id,
                  s.position.x(), s.position.y(), s.position.z(), s.normal.x(),
                  s.normal.y(), s.normal.z(), s.label, s.radius, s.intensity,
                  static_cast<double>(s.grad_mag), s.obs_count, s.sample_count, s.entropy);
    out << buf;
  }
}

}  // namespace dirslam
