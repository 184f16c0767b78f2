#include "baleen/corpus.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "baleen/util.hpp"
#include "json.hpp"

namespace baleen {

using ojson = nlohmann::ordered_json;

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  });
}

void check_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                std::string_view what) {
  if (!j.is_object()) throw Error(std::string(what) + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(std::string(what) + ": unknown field \"" + key + "\"");
    }
  }
}

template <typename T>
T required(const nlohmann::json& j, const char* key, std::string_view what) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(std::string(what) + ": missing field \"" + key + "\"");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(std::string(what) + ": field \"" + key + "\" has the wrong type");
  }
}

void validate_passage(const Passage& p) {
  if (p.pid.empty()) throw Error("passage with empty pid");
  if (p.sentences.empty()) throw Error("passage " + p.pid + " has no sentences");
  for (std::size_t i = 0; i < p.sentences.size(); ++i) {
    if (is_blank(p.sentences[i])) {
      throw Error("passage " + p.pid + " sentence " + std::to_string(i) + " is blank");
    }
  }
}

}  // namespace

std::string Passage::full_text() const {
  std::string out = title;
  out += '.';
  for (const auto& s : sentences) {
    out += ' ';
    out += s;
  }
  return out;
}

Corpus::Corpus(std::vector<Passage> passages) : passages_(std::move(passages)) {
  by_pid_.reserve(passages_.size());
  for (std::size_t i = 0; i < passages_.size(); ++i) {
    validate_passage(passages_[i]);
    if (!by_pid_.emplace(passages_[i].pid, i).second) {
      throw Error("duplicate pid: " + passages_[i].pid);
    }
  }
}

bool Corpus::contains(std::string_view pid) const {
  return by_pid_.find(std::string(pid)) != by_pid_.end();
}

std::optional<std::size_t> Corpus::slot_of(std::string_view pid) const {
  auto it = by_pid_.find(std::string(pid));
  if (it == by_pid_.end()) return std::nullopt;
  return it->second;
}

const Passage& Corpus::lookup(std::string_view pid) const {
  auto slot = slot_of(pid);
  if (!slot) throw Error("unknown pid: " + std::string(pid));
  return passages_[*slot];
}

Passage passage_from_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  check_keys(j, {"pid", "title", "sentences"}, "passage");
  Passage p;
  p.pid = required<std::string>(j, "pid", "passage");
  p.title = required<std::string>(j, "title", "passage");
  p.sentences = required<std::vector<std::string>>(j, "sentences", "passage");
  return p;
}

std::string passage_to_jsonl(const Passage& p) {
  ojson j;
  j["pid"] = p.pid;
  j["title"] = p.title;
  j["sentences"] = p.sentences;
  return j.dump();
}

QueryRecord query_from_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  check_keys(j, {"qid", "text", "gold_pids", "gold_facts", "answer", "label", "num_hops"},
             "query");
  QueryRecord q;
  q.qid = required<std::string>(j, "qid", "query");
  q.text = required<std::string>(j, "text", "query");
  q.gold_pids = required<std::vector<std::string>>(j, "gold_pids", "query");
  if (j.contains("gold_facts")) {
    for (const auto& f : j.at("gold_facts")) {
      if (!f.is_array() || f.size() != 2 || !f[0].is_string() || !f[1].is_number_integer()) {
        throw Error("query " + q.qid + ": gold_facts entries must be [pid, sentence_index]");
      }
      q.gold_facts.emplace_back(f[0].get<std::string>(), f[1].get<int>());
    }
  }
  if (j.contains("answer")) q.answer = required<std::string>(j, "answer", "query");
  if (j.contains("label")) q.label = required<bool>(j, "label", "query");
  if (j.contains("num_hops")) {
    q.num_hops = required<int>(j, "num_hops", "query");
    if (*q.num_hops < 2 || *q.num_hops > 4) {
      throw Error("query " + q.qid + ": num_hops must be 2, 3 or 4");
    }
  }
  std::set<std::string> seen;
  for (const auto& pid : q.gold_pids) {
    if (!seen.insert(pid).second) throw Error("query " + q.qid + ": duplicate gold pid " + pid);
  }
  for (const auto& [pid, _] : q.gold_facts) {
    if (!seen.count(pid)) {
      throw Error("query " + q.qid + ": gold fact references non-gold pid " + pid);
    }
  }
  return q;
}

std::string query_to_jsonl(const QueryRecord& q) {
  ojson j;
  j["qid"] = q.qid;
  j["text"] = q.text;
  j["gold_pids"] = q.gold_pids;
  if (!q.gold_facts.empty()) {
    ojson facts = ojson::array();
    for (const auto& [pid, idx] : q.gold_facts) facts.push_back(ojson::array({pid, idx}));
    j["gold_facts"] = std::move(facts);
  }
  if (q.answer) j["answer"] = *q.answer;
  if (q.label) j["label"] = *q.label;
  if (q.num_hops) j["num_hops"] = *q.num_hops;
  return j.dump();
}

Corpus load_corpus(const std::string& path) {
  std::vector<Passage> passages;
  std::unordered_map<std::string, std::size_t> first_seen;
  for_each_line(path, [&](std::size_t lineno, const std::string& line) {
    Passage p;
    try {
      p = passage_from_json_line(line);
      validate_passage(p);
    } catch (const nlohmann::json::exception& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": malformed line: " + e.what());
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!first_seen.emplace(p.pid, lineno).second) {
      throw Error(path + ":" + std::to_string(lineno) + ": duplicate pid: " + p.pid);
    }
    passages.push_back(std::move(p));
  });
  return Corpus(std::move(passages));
}

std::vector<QueryRecord> read_queryset(const std::string& path) {
  std::vector<QueryRecord> out;
  std::set<std::string> qids;
  for_each_line(path, [&](std::size_t lineno, const std::string& line) {
    try {
      out.push_back(query_from_json_line(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": malformed line: " + e.what());
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!qids.insert(out.back().qid).second) {
      throw Error(path + ":" + std::to_string(lineno) + ": duplicate qid: " + out.back().qid);
    }
  });
  return out;
}

void validate_queryset(const std::vector<QueryRecord>& queries, const Corpus& corpus) {
  for (const auto& q : queries) {
    for (const auto& pid : q.gold_pids) {
      if (!corpus.contains(pid)) {
        throw Error("query " + q.qid + ": gold pid " + pid + " not in corpus");
      }
    }
    for (const auto& [pid, idx] : q.gold_facts) {
      const auto& p = corpus.lookup(pid);
      if (idx < 0 || static_cast<std::size_t>(idx) >= p.sentences.size()) {
        throw Error("query " + q.qid + ": gold fact (" + pid + ", " + std::to_string(idx) +
                    ") is out of range");
      }
    }
  }
}

std::vector<QueryRecord> load_queryset(const std::string& path, const Corpus& corpus) {
  auto queries = read_queryset(path);
  validate_queryset(queries, corpus);
  return queries;
}

void write_corpus(const std::string& path, const std::vector<Passage>& passages) {
  std::string out;
  for (const auto& p : passages) {
    out += passage_to_jsonl(p);
    out += '\n';
  }
  write_file(path, out);
}

void write_queryset(const std::string& path, const std::vector<QueryRecord>& queries) {
  std::string out;
  for (const auto& q : queries) {
    out += query_to_jsonl(q);
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace baleen
