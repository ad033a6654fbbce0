/* Copyright 2026 The PCPP Simulator Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "pcpp/protocol/trace.h"

#include <istream>
#include <map>
#include <ostream>
#include <tuple>

#include <json.hpp>

#include "pcpp/error.h"

namespace pcpp {

using nlohmann::json;

std::string_view trace_kind_name(TraceKind kind) {
  switch (kind) {
    case TraceKind::kSend: return "send";
    case TraceKind::kRecv: return "recv";
    case TraceKind::kWait: return "wait";
    case TraceKind::kCompute: return "compute";
  }
  return "unknown";
}

namespace {

TraceKind parse_kind(const std::string& s) {
  if (s == "send") return TraceKind::kSend;
  if (s == "recv") return TraceKind::kRecv;
  if (s == "wait") return TraceKind::kWait;
  if (s == "compute") return TraceKind::kCompute;
  throw InvalidConfig("unknown trace event '" + s + "'");
}

LayerKind parse_layer_kind(const std::string& s) {
  for (LayerKind k : {LayerKind::kGroupNorm, LayerKind::kAttention, LayerKind::kConv}) {
    if (layer_kind_name(k) == s) return k;
  }
  throw InvalidConfig("unknown layer type '" + s + "'");
}

}  // namespace

std::string to_json_line(const TraceEvent& e) {
  json j = {{"event", trace_kind_name(e.event)},
            {"rank", e.rank},
            {"layer", e.layer},
            {"step", e.step},
            {"peer", e.peer},
            {"bytes", e.bytes},
            {"tick", e.tick},
            {"pass", e.pass},
            {"phase", phase_name(e.phase)}};
  if (e.layer_type) j["layer_type"] = layer_kind_name(*e.layer_type);
  if (e.event == TraceKind::kRecv) {
    j["expect"] = {{"layer", e.expect_layer}, {"step", e.expect_step}, {"pass", e.expect_pass}};
  }
  if (e.event == TraceKind::kCompute) {
    json ctx = json::array();
    for (const auto& c : e.context) ctx.push_back({{"peer", c.peer}, {"step", c.step}});
    j["context"] = std::move(ctx);
  }
  return j.dump();
}

TraceEvent parse_trace_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& ex) {
    throw InvalidConfig(std::string("malformed trace line: ") + ex.what());
  }
  try {
    TraceEvent e;
    e.event = parse_kind(j.at("event").get<std::string>());
    e.rank = j.at("rank").get<int>();
    e.layer = j.at("layer").get<int>();
    e.step = j.at("step").get<int>();
    e.peer = j.at("peer").get<int>();
    e.bytes = j.at("bytes").get<std::int64_t>();
    e.tick = j.at("tick").get<std::uint64_t>();
    e.pass = j.value("pass", 0);
    e.phase = j.value("phase", std::string("async")) == "warmup" ? Phase::kWarmup : Phase::kAsync;
    if (j.contains("layer_type")) e.layer_type = parse_layer_kind(j["layer_type"].get<std::string>());
    if (j.contains("expect")) {
      e.expect_layer = j["expect"].at("layer").get<int>();
      e.expect_step = j["expect"].at("step").get<int>();
      e.expect_pass = j["expect"].at("pass").get<int>();
    }
    if (j.contains("context")) {
      for (const auto& c : j["context"]) e.context.push_back({c.at("peer").get<int>(), c.at("step").get<int>()});
    }
    return e;
  } catch (const json::exception& ex) {
    throw InvalidConfig(std::string("trace line missing field: ") + ex.what());
  }
}

void write_trace(std::ostream& out, const std::vector<TraceEvent>& events) {
  for (const auto& e : events) out << to_json_line(e) << '\n';
}

std::vector<TraceEvent> read_trace(std::istream& in) {
  std::vector<TraceEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    events.push_back(parse_trace_line(line));
  }
  return events;
}

TraceCheck validate_trace(const std::vector<TraceEvent>& events) {
  using Key = std::tuple<int, int, int>;  // pass, layer, step
  TraceCheck check;
  check.events = events.size();
  auto fail = [&check](const TraceEvent& e, const std::string& what) {
    check.violations.push_back("tick " + std::to_string(e.tick) + " rank " + std::to_string(e.rank) + ": " + what);
  };

  std::map<std::pair<int, int>, Key> open_pair;  // (rank, peer) -> batch in flight
  std::map<int, Key> open_rank;
  std::map<std::pair<int, int>, std::vector<Key>> sent, received;
  std::uint64_t last_tick = 0;
  bool first = true;

  for (const TraceEvent& e : events) {
    if (!first && e.tick <= last_tick) fail(e, "ticks are not strictly increasing");
    first = false;
    last_tick = e.tick;
    const Key key{e.pass, e.layer, e.step};
    switch (e.event) {
      case TraceKind::kSend: {
        ++check.sends;
        auto rank_it = open_rank.find(e.rank);
        if (rank_it != open_rank.end() && rank_it->second != key) {
          fail(e, "issued a batch while another is still in flight");
        }
        open_rank[e.rank] = key;
        auto [it, inserted] = open_pair.try_emplace({e.rank, e.peer}, key);
        if (!inserted && it->second != key) fail(e, "second in-flight batch to peer " + std::to_string(e.peer));
        it->second = key;
        sent[{e.rank, e.peer}].push_back(key);
        break;
      }
      case TraceKind::kRecv: {
        ++check.recvs;
        if (e.layer != e.expect_layer || e.step != e.expect_step || e.pass != e.expect_pass) {
          fail(e, "message (layer " + std::to_string(e.layer) + ", step " + std::to_string(e.step) +
                      ") bound to expectation (layer " + std::to_string(e.expect_layer) + ", step " +
                      std::to_string(e.expect_step) + ")");
        }
        auto& seq = received[{e.peer, e.rank}];
        const auto& src_seq = sent[{e.peer, e.rank}];
        if (seq.size() >= src_seq.size() || src_seq[seq.size()] != key) {
          fail(e, "receive from " + std::to_string(e.peer) + " out of send order");
        }
        seq.push_back(key);
        break;
      }
      case TraceKind::kWait: {
        auto rank_it = open_rank.find(e.rank);
        if (rank_it != open_rank.end()) {
          if (rank_it->second != key) fail(e, "wait does not match the batch in flight");
          open_rank.erase(rank_it);
        }
        for (auto it = open_pair.begin(); it != open_pair.end();) {
          it = it->first.first == e.rank ? open_pair.erase(it) : std::next(it);
        }
        break;
      }
      case TraceKind::kCompute: {
        const int want = e.phase == Phase::kAsync ? e.step + 1 : e.step;
        for (const ContextRef& c : e.context) {
          if (e.phase == Phase::kAsync) ++check.stale_reads;
          if (c.step != want) {
            fail(e, "layer " + std::to_string(e.layer) + " read peer " + std::to_string(c.peer) +
                        " activation from step " + std::to_string(c.step) + ", expected " +
                        std::to_string(want));
          }
        }
        break;
      }
    }
  }
  return check;
}

}  // namespace pcpp
