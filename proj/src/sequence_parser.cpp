#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <span>
#include <sstream>

#include "twotrap/sequence.hpp"

namespace twotrap {

namespace {

struct Token {
    std::string text;
    int column = 0;
};

std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (line[i] == '#') break;
        if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' && line[i] != '#') ++i;
        out.push_back({std::string(line.substr(start, i - start)), static_cast<int>(start) + 1});
    }
    return out;
}

// key=value arguments of one line, consumed by name.
class Args {
public:
    Args(int line, const Token& head, std::span<const Token> rest) : line_(line), head_(head) {
        for (const auto& t : rest) {
            const auto eq = t.text.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == t.text.size()) {
                throw ParseError(line, t.column, t.text, "expected key=value");
            }
            std::string key = t.text.substr(0, eq);
            if (values_.count(key) != 0) throw ParseError(line, t.column, t.text, "duplicate key '" + key + "'");
            values_.emplace(std::move(key), Entry{t.text.substr(eq + 1), t.column + static_cast<int>(eq) + 1, false});
        }
    }

    double real(const std::string& key) {
        auto& e = take(key);
        double v = 0.0;
        const auto* first = e.value.data();
        const auto* last = first + e.value.size();
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
            throw ParseError(line_, e.column, e.value, "expected a number for '" + key + "'");
        }
        return v;
    }

    int integer(const std::string& key) {
        auto& e = take(key);
        int v = 0;
        const auto* first = e.value.data();
        const auto* last = first + e.value.size();
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last) {
            throw ParseError(line_, e.column, e.value, "expected an integer for '" + key + "'");
        }
        return v;
    }

    std::string word(const std::string& key) { return take(key).value; }

    void finish() const {
        for (const auto& [key, e] : values_) {
            if (!e.used) throw ParseError(line_, e.column, key, "unknown key '" + key + "' for " + head_.text);
        }
    }

private:
    struct Entry {
        std::string value;
        int column;
        bool used;
    };

    Entry& take(const std::string& key) {
        auto it = values_.find(key);
        if (it == values_.end()) {
            throw ParseError(line_, head_.column, head_.text, "missing key '" + key + "' for " + head_.text);
        }
        it->second.used = true;
        return it->second;
    }

    int line_;
    Token head_;
    std::map<std::string, Entry> values_;
};

Step parse_step(const Token& head, Args& a, int line) {
    const auto& name = head.text;
    if (name == "load_atoms") {
        step::LoadAtoms s;
        s.count = a.integer("count");
        s.spread = a.real("spread");
        return s;
    }
    if (name == "image") return step::Image{a.real("exposure")};
    if (name == "transport_hdt") {
        step::TransportHDT s;
        s.atom = a.integer("atom");
        s.target_y = a.real("y");
        s.duration = a.real("dur");
        return s;
    }
    if (name == "extract_vdt") {
        step::ExtractVDT s;
        s.atom = a.integer("atom");
        s.lift = a.real("lift");
        s.duration = a.real("dur");
        return s;
    }
    if (name == "tilt_hdt") return step::TiltHDT{a.real("dx"), a.real("dur")};
    if (name == "transport_vdt") return step::TransportVDT{a.real("z"), a.real("dur")};
    if (name == "merge_radial") return step::MergeRadial{a.real("dur")};
    if (name == "ramp_vdt") return step::RampVDT{a.real("scale"), a.real("dur")};
    if (name == "molasses") return step::Molasses{a.real("dur")};
    throw ParseError(line, head.column, name, "unknown step '" + name + "'");
}

std::string fmt(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void check_duration(double d, std::string_view name, int line) {
    if (!(d > 0.0)) throw RangeError(line, "line " + std::to_string(line) + ": " + std::string(name) + ": dur > 0 s required");
}

bool valid_name(const std::string& name) {
    if (name.empty()) return false;
    for (char c : name) {
        if (c == ' ' || c == '\t' || c == '#' || c == '=' || c == '\n' || c == '\r') return false;
    }
    return true;
}

}  // namespace

ParseError::ParseError(int line, int column, std::string token, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message +
                         " (near '" + token + "')"),
      line_(line),
      column_(column),
      token_(std::move(token)) {}

std::string_view step_name(const Step& s) {
    static constexpr std::string_view names[] = {"load_atoms",    "image",        "transport_hdt",
                                                  "extract_vdt",   "tilt_hdt",     "transport_vdt",
                                                  "merge_radial",  "ramp_vdt",     "molasses"};
    return names[s.index()];
}

void validate(const Step& s, int line) {
    const std::string where = "line " + std::to_string(line) + ": " + std::string(step_name(s)) + ": ";
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, step::LoadAtoms>) {
                if (v.count < 1 || v.count > limits::max_atoms) {
                    throw RangeError(line, where + "1 <= count <= " + std::to_string(limits::max_atoms) + " required");
                }
                if (!(v.spread > 0.0 && v.spread <= limits::max_spread)) {
                    throw RangeError(line, where + "0 < spread <= " + fmt(limits::max_spread) + " um required");
                }
            } else if constexpr (std::is_same_v<T, step::Image>) {
                if (!(v.exposure > 0.0)) throw RangeError(line, where + "exposure > 0 s required");
            } else if constexpr (std::is_same_v<T, step::TransportHDT>) {
                if (v.atom < 1) throw RangeError(line, where + "atom >= 1 required");
                if (!(std::abs(v.target_y) <= limits::max_conveyor)) {
                    throw RangeError(line, where + "|y| <= " + fmt(limits::max_conveyor) + " um required");
                }
                check_duration(v.duration, step_name(s), line);
            } else if constexpr (std::is_same_v<T, step::ExtractVDT>) {
                if (v.atom < 1) throw RangeError(line, where + "atom >= 1 required");
                if (!(v.lift > 0.0 && v.lift <= limits::max_vdt_travel)) {
                    throw RangeError(line, where + "0 < lift <= " + fmt(limits::max_vdt_travel) + " um required");
                }
                check_duration(v.duration, step_name(s), line);
            } else if constexpr (std::is_same_v<T, step::TiltHDT>) {
                if (!(std::abs(v.delta_x) <= limits::max_tilt)) {
                    throw RangeError(line, where + "|dx| <= " + fmt(limits::max_tilt) + " um required");
                }
                check_duration(v.duration, step_name(s), line);
            } else if constexpr (std::is_same_v<T, step::TransportVDT>) {
                if (!(std::abs(v.target_z) <= limits::max_vdt_travel)) {
                    throw RangeError(line, where + "|z| <= " + fmt(limits::max_vdt_travel) + " um required");
                }
                check_duration(v.duration, step_name(s), line);
            } else if constexpr (std::is_same_v<T, step::RampVDT>) {
                if (!(v.final_scale >= 0.0 && v.final_scale <= 1.0)) {
                    throw RangeError(line, where + "0 <= scale <= 1 required");
                }
                check_duration(v.duration, step_name(s), line);
            } else {
                check_duration(v.duration, step_name(s), line);
            }
        },
        s);
}

Sequence parse_sequence(std::string_view text) {
    Sequence seq;
    bool have_header = false;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++line_no;
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;

        const auto tokens = tokenize(line);
        if (tokens.empty()) continue;
        const auto& head = tokens.front();
        Args args(line_no, head, std::span<const Token>(tokens).subspan(1));
        if (head.text == "sequence") {
            if (have_header) throw ParseError(line_no, head.column, head.text, "duplicate sequence header");
            if (!seq.steps.empty()) throw ParseError(line_no, head.column, head.text, "sequence header must precede steps");
            seq.name = args.word("name");
            seq.target_distance = args.real("target");
            if (!(seq.target_distance >= 0.0)) throw RangeError(line_no, "line " + std::to_string(line_no) + ": sequence: target >= 0 um required");
            args.finish();
            have_header = true;
            continue;
        }
        Step s = parse_step(head, args, line_no);
        args.finish();
        validate(s, line_no);
        seq.steps.push_back(s);
    }
    return seq;
}

Sequence load_sequence_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open sequence file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_sequence(buf.str());
}

std::string render_sequence(const Sequence& seq) {
    if (!valid_name(seq.name)) throw std::invalid_argument("sequence name must be a single token without '=' or '#'");
    std::string out = "sequence name=" + seq.name + " target=" + fmt(seq.target_distance) + "\n";
    for (const auto& s : seq.steps) {
        out += step_name(s);
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, step::LoadAtoms>) {
                    out += " count=" + std::to_string(v.count) + " spread=" + fmt(v.spread);
                } else if constexpr (std::is_same_v<T, step::Image>) {
                    out += " exposure=" + fmt(v.exposure);
                } else if constexpr (std::is_same_v<T, step::TransportHDT>) {
                    out += " atom=" + std::to_string(v.atom) + " y=" + fmt(v.target_y) + " dur=" + fmt(v.duration);
                } else if constexpr (std::is_same_v<T, step::ExtractVDT>) {
                    out += " atom=" + std::to_string(v.atom) + " lift=" + fmt(v.lift) + " dur=" + fmt(v.duration);
                } else if constexpr (std::is_same_v<T, step::TiltHDT>) {
                    out += " dx=" + fmt(v.delta_x) + " dur=" + fmt(v.duration);
                } else if constexpr (std::is_same_v<T, step::TransportVDT>) {
                    out += " z=" + fmt(v.target_z) + " dur=" + fmt(v.duration);
                } else if constexpr (std::is_same_v<T, step::RampVDT>) {
                    out += " scale=" + fmt(v.final_scale) + " dur=" + fmt(v.duration);
                } else {
                    out += " dur=" + fmt(v.duration);
                }
            },
            s);
        out += '\n';
    }
    return out;
}

}  // namespace twotrap
