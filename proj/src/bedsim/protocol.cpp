#include "bedsim/protocol.hpp"

#include <cmath>
#include <cstdlib>
#include <cstdio>

#include <json.hpp>

#include "bedsim/profile_json.hpp"

namespace bedsim::protocol {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

// Rounds through the decimal text so canonicalize agrees with encode bit for bit.
double round_to(double v, int decimals) { return std::strtod(fixed(v, decimals).c_str(), nullptr); }

std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

std::string grid_text(const Grid<double>& g, int decimals) {
  std::string out = "[";
  for (int r = 0; r < g.rows(); ++r) {
    out += r ? ",[" : "[";
    for (int c = 0; c < g.cols(); ++c) {
      if (c) out += ',';
      out += fixed(g(r, c), decimals);
    }
    out += ']';
  }
  return out + "]";
}

std::string bits_text(const BinaryMap& b) {
  std::string out = "[";
  for (int r = 0; r < b.spec().rows; ++r) {
    out += r ? ",[" : "[";
    for (int c = 0; c < b.spec().cols; ++c) {
      if (c) out += ',';
      out += b(r, c) ? '1' : '0';
    }
    out += ']';
  }
  return out + "]";
}

// Profile as a single-line JSON object with the document's field order.
std::string profile_text(const BodyProfile& p) {
  json::array_t rows;
  for (int r = 0; r < p.spec().rows; ++r) {
    json::array_t row;
    for (int c = 0; c < p.spec().cols; ++c) {
      const auto& v = p.clearance_mm(r, c);
      row.push_back(v ? json(*v) : json(nullptr));
    }
    rows.push_back(std::move(row));
  }
  nlohmann::ordered_json grid;
  grid["rows"] = p.spec().rows;
  grid["cols"] = p.spec().cols;
  if (p.spec().cell_pitch_mm != GridSpec{}.cell_pitch_mm) grid["cell_pitch_mm"] = p.spec().cell_pitch_mm;
  nlohmann::ordered_json doc;
  doc["name"] = p.name;
  doc["weight_kgf"] = p.weight_kgf;
  doc["grid"] = grid;
  doc["clearance_mm"] = rows;
  return doc.dump();
}

}  // namespace

std::string_view type_name(const Message& msg) {
  return std::visit(
      overloaded{
          [](const Hello&) { return std::string_view("hello"); },
          [](const GetStatus&) { return std::string_view("get_status"); },
          [](const Activate&) { return std::string_view("activate"); },
          [](const Deactivate&) { return std::string_view("deactivate"); },
          [](const SetMode&) { return std::string_view("set_mode"); },
          [](const LoadBody&) { return std::string_view("load_body"); },
          [](const Subscribe&) { return std::string_view("subscribe"); },
          [](const Unsubscribe&) { return std::string_view("unsubscribe"); },
          [](const Status&) { return std::string_view("status"); },
          [](const Snapshot&) { return std::string_view("snapshot"); },
          [](const Ack&) { return std::string_view("ack"); },
          [](const ErrorReply&) { return std::string_view("error"); },
      },
      msg);
}

std::string encode(const Message& msg) {
  std::string out = "{\"v\":" + std::to_string(kVersion) + ",\"type\":\"" +
                    std::string(type_name(msg)) + "\"";
  std::visit(overloaded{
                 [](const Hello&) {},
                 [](const GetStatus&) {},
                 [&](const Activate& m) { out += ",\"mode\":\"" + std::string(to_string(m.mode)) + "\""; },
                 [](const Deactivate&) {},
                 [&](const SetMode& m) { out += ",\"mode\":\"" + std::string(to_string(m.mode)) + "\""; },
                 [&](const LoadBody& m) {
                   if (const auto* name = std::get_if<std::string>(&m.body)) {
                     out += ",\"profile_name\":" + json_string(*name);
                   } else {
                     out += ",\"profile\":" + profile_text(std::get<BodyProfile>(m.body));
                   }
                 },
                 [&](const Subscribe& m) { out += ",\"rate_hz\":" + fixed(m.rate_hz, 3); },
                 [](const Unsubscribe&) {},
                 [&](const Status& m) {
                   out += ",\"weight_kgf\":" + fixed(m.weight_kgf, 4) + ",\"mode\":\"" +
                          std::string(to_string(m.mode)) + "\",\"active\":" +
                          (m.active ? "true" : "false") + ",\"converged\":" +
                          (m.converged ? "true" : "false") + ",\"tick\":" + std::to_string(m.tick) +
                          ",\"excluded_count\":" + std::to_string(m.excluded_count) +
                          ",\"target_kgf\":" + fixed(m.target_kgf, 4);
                 },
                 [&](const Snapshot& m) {
                   out += ",\"tick\":" + std::to_string(m.tick) + ",\"pressures\":" +
                          grid_text(m.pressures, 4) + ",\"extensions\":" + grid_text(m.extensions, 2) +
                          ",\"support\":" + bits_text(m.support);
                 },
                 [&](const Ack& m) { out += ",\"request_type\":" + json_string(m.request_type); },
                 [&](const ErrorReply& m) {
                   out += ",\"code\":" + json_string(m.code) + ",\"message\":" + json_string(m.message);
                   if (m.weight_kgf) out += ",\"weight_kgf\":" + fixed(*m.weight_kgf, 4);
                 },
             },
             msg);
  out += "}\n";
  return out;
}

Message canonicalize(const Message& msg) {
  Message out = msg;
  std::visit(overloaded{
                 [](Subscribe& m) { m.rate_hz = round_to(m.rate_hz, 3); },
                 [](Status& m) {
                   m.weight_kgf = round_to(m.weight_kgf, 4);
                   m.target_kgf = round_to(m.target_kgf, 4);
                 },
                 [](Snapshot& m) {
                   for (auto& v : m.pressures.values()) v = round_to(v, 4);
                   for (auto& v : m.extensions.values()) v = round_to(v, 2);
                 },
                 [](ErrorReply& m) {
                   if (m.weight_kgf) m.weight_kgf = round_to(*m.weight_kgf, 4);
                 },
                 [](auto&) {},
             },
             out);
  return out;
}

namespace {

[[noreturn]] void bad_request(const std::string& what) { throw DecodeError("bad_request", what); }

const json& field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) bad_request(std::string("missing field '") + key + "'");
  return *it;
}

template <typename T>
T get(const json& doc, const char* key) {
  try {
    return field(doc, key).get<T>();
  } catch (const json::exception&) {
    bad_request(std::string("field '") + key + "' has the wrong type");
  }
}

FirmnessMode mode_field(const json& doc) {
  const auto m = parse_firmness(get<std::string>(doc, "mode"));
  if (!m) bad_request("mode must be standard, medium or soft");
  return *m;
}

GridSpec matrix_shape(const json& m, const char* key) {
  if (!m.is_array() || m.empty() || !m.front().is_array() || m.front().empty()) {
    bad_request(std::string("'") + key + "' must be a non-empty matrix");
  }
  GridSpec spec;
  spec.rows = static_cast<int>(m.size());
  spec.cols = static_cast<int>(m.front().size());
  for (const auto& row : m) {
    if (!row.is_array() || row.size() != static_cast<std::size_t>(spec.cols)) {
      bad_request(std::string("'") + key + "' rows differ in length");
    }
  }
  return spec;
}

Grid<double> matrix(const json& doc, const char* key) {
  const json& m = field(doc, key);
  Grid<double> g(matrix_shape(m, key));
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) {
      const json& v = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      if (!v.is_number()) bad_request(std::string("'") + key + "' entries must be numbers");
      g(r, c) = v.get<double>();
    }
  }
  return g;
}

}  // namespace

Message decode(std::string_view frame) {
  if (frame.size() > kMaxFrameBytes) {
    throw DecodeError("frame_too_large", "frame exceeds " + std::to_string(kMaxFrameBytes) + " bytes");
  }
  if (!frame.empty() && frame.back() == '\n') frame.remove_suffix(1);
  if (!frame.empty() && frame.back() == '\r') frame.remove_suffix(1);
  if (frame.find('\n') != std::string_view::npos) throw DecodeError("bad_frame", "embedded newline");

  json doc;
  try {
    doc = json::parse(frame);
  } catch (const json::exception& e) {
    throw DecodeError("bad_frame", std::string("malformed frame: ") + e.what());
  }
  if (!doc.is_object()) throw DecodeError("bad_frame", "frame must be a JSON object");
  auto v = doc.find("v");
  if (v == doc.end() || !v->is_number_integer()) throw DecodeError("bad_frame", "missing protocol version 'v'");
  if (v->get<std::int64_t>() != kVersion) {
    throw DecodeError("bad_version", "unsupported protocol version " + v->dump());
  }
  auto t = doc.find("type");
  if (t == doc.end() || !t->is_string()) throw DecodeError("bad_frame", "missing message 'type'");
  const auto type = t->get<std::string>();

  if (type == "hello") return Hello{kVersion};
  if (type == "get_status") return GetStatus{};
  if (type == "activate") return Activate{mode_field(doc)};
  if (type == "deactivate") return Deactivate{};
  if (type == "set_mode") return SetMode{mode_field(doc)};
  if (type == "load_body") {
    if (doc.contains("profile")) {
      try {
        return LoadBody{profile_from_json(doc["profile"])};
      } catch (const Error& e) {
        throw DecodeError("invalid_profile", e.what());
      }
    }
    return LoadBody{get<std::string>(doc, "profile_name")};
  }
  if (type == "subscribe") {
    const double rate = get<double>(doc, "rate_hz");
    if (!(rate > 0.0) || !std::isfinite(rate)) bad_request("rate_hz must be positive");
    return Subscribe{rate};
  }
  if (type == "unsubscribe") return Unsubscribe{};
  if (type == "status") {
    Status s;
    s.weight_kgf = get<double>(doc, "weight_kgf");
    s.mode = mode_field(doc);
    s.active = get<bool>(doc, "active");
    s.converged = get<bool>(doc, "converged");
    s.tick = get<std::int64_t>(doc, "tick");
    s.excluded_count = get<std::int64_t>(doc, "excluded_count");
    if (doc.contains("target_kgf")) s.target_kgf = get<double>(doc, "target_kgf");
    return s;
  }
  if (type == "snapshot") {
    Snapshot s;
    s.tick = get<std::int64_t>(doc, "tick");
    s.pressures = matrix(doc, "pressures");
    s.extensions = matrix(doc, "extensions");
    const Grid<double> bits = matrix(doc, "support");
    s.support = BinaryMap(bits.spec());
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] != 0.0 && bits[i] != 1.0) bad_request("'support' entries must be 0 or 1");
      s.support.set_index(i, bits[i] == 1.0);
    }
    if (!s.pressures.spec().same_shape(s.extensions.spec()) ||
        !s.pressures.spec().same_shape(s.support.spec())) {
      bad_request("snapshot grids differ in shape");
    }
    return s;
  }
  if (type == "ack") return Ack{get<std::string>(doc, "request_type")};
  if (type == "error") {
    ErrorReply e{get<std::string>(doc, "code"), get<std::string>(doc, "message"), std::nullopt};
    if (doc.contains("weight_kgf")) e.weight_kgf = get<double>(doc, "weight_kgf");
    return e;
  }
  throw DecodeError("unknown_type", "unknown message type '" + type + "'");
}

}  // namespace bedsim::protocol
