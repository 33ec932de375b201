#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <sstream>

#include "g2cp/protocol.hpp"
#include "g2cp/strutil.hpp"
#include "g2cp/timeutil.hpp"

namespace g2cp {

const char* to_string(Performative p) {
    switch (p) {
        case Performative::Request: return "REQUEST";
        case Performative::Inform: return "INFORM";
        case Performative::Query: return "QUERY";
        case Performative::Propose: return "PROPOSE";
        case Performative::Confirm: return "CONFIRM";
        case Performative::Reject: return "REJECT";
        case Performative::Update: return "UPDATE";
    }
    return "?";
}

const char* to_string(ReturnFormat f) {
    switch (f) {
        case ReturnFormat::Subgraph: return "SUBGRAPH";
        case ReturnFormat::Paths: return "PATHS";
        case ReturnFormat::Leaves: return "LEAVES";
    }
    return "?";
}

namespace {

const std::vector<std::string> kPerformatives = {"REQUEST", "INFORM",  "QUERY", "PROPOSE",
                                                 "CONFIRM", "REJECT", "UPDATE"};

bool is_ident_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '_' || c == ':' || c == '-';
}

bool is_ident(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), is_ident_char);
}

const char* op_text(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "=";
        case CmpOp::Ne: return "!=";
        case CmpOp::Lt: return "<";
        case CmpOp::Gt: return ">";
        case CmpOp::Le: return "<=";
        case CmpOp::Ge: return ">=";
    }
    return "?";
}

std::string value_text(const AttrValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return quote(*s);
    if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
    return std::get<bool>(v) ? "true" : "false";
}

std::string predicate_text(const Predicate& p) {
    std::string out;
    for (std::size_t i = 0; i < p.all.size(); ++i) {
        if (i) out += " AND ";
        out += p.all[i].attr;
        out += ' ';
        out += op_text(p.all[i].op);
        out += ' ';
        out += value_text(p.all[i].value);
    }
    return out;
}

std::string selector_text(const NodeSelector& s) {
    std::string out = "{";
    auto join_sorted = [&out](std::vector<std::string> items, const std::string& prefix) {
        std::sort(items.begin(), items.end());
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i) out += ", ";
            out += prefix + items[i];
        }
    };
    switch (s.kind) {
        case SelectorKind::ExplicitIds: join_sorted(s.ids, ""); break;
        case SelectorKind::ByType: join_sorted(s.types, "type="); break;
        case SelectorKind::ByName: {
            std::vector<std::string> quoted;
            for (const auto& n : s.names) quoted.push_back("name=" + quote(n));
            join_sorted(std::move(quoted), "");
            break;
        }
        case SelectorKind::ContextRef: out += s.symbol; break;
        case SelectorKind::PropertyFilter:
            out += s.filter_type + " WHERE " + predicate_text(s.predicate);
            break;
    }
    out += '}';
    return out;
}

std::string idset_text(const std::set<std::string>& items) {
    std::string out = "{";
    bool first = true;
    for (const auto& i : items) {
        if (!first) out += ", ";
        out += i;
        first = false;
    }
    out += '}';
    return out;
}

std::string wire_edge_text(const WireEdge& e) {
    return e.from + " -[" + e.type + "]-> " + e.to;
}

std::string path_text(const WirePath& p) {
    if (p.steps.empty()) return "";
    std::string out = p.steps.front().from;
    for (const WireEdge& e : p.steps) out += " -[" + e.type + "]-> " + e.to;
    return out;
}

std::vector<std::string> traverse_lines(const TraverseOp& op) {
    std::vector<std::string> out;
    out.push_back("TRAVERSE");
    out.push_back("FROM: " + selector_text(op.from));
    out.push_back("VIA: " + idset_text(op.via));
    out.push_back("DEPTH: " + (op.depth.unbounded ? std::string("UNBOUNDED")
                                                  : std::to_string(op.depth.hops)));
    out.push_back("RETURN: " + std::string(to_string(op.ret)));
    if (op.constraints) out.push_back("CONSTRAINTS: " + predicate_text(*op.constraints));
    return out;
}

std::vector<std::string> result_lines(const ResultBody& r) {
    std::vector<std::string> out;
    out.push_back("RESULT " + std::string(to_string(r.format)));
    std::string nodes = "Nodes: {";
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        if (i) nodes += ", ";
        nodes += r.nodes[i];
    }
    nodes += '}';
    out.push_back(std::move(nodes));
    std::string edges = "Edges: {";
    for (std::size_t i = 0; i < r.edges.size(); ++i) {
        if (i) edges += ", ";
        edges += wire_edge_text(r.edges[i]);
    }
    edges += '}';
    out.push_back(std::move(edges));
    if (!r.nodes.empty()) {
        std::string conf = "Confidence: [";
        for (std::size_t i = 0; i < r.confidence.size(); ++i) {
            if (i) conf += ", ";
            conf += format_double(r.confidence[i]);
        }
        conf += ']';
        out.push_back(std::move(conf));
    }
    if (r.format == ReturnFormat::Paths) {
        std::string paths = "Paths: {";
        for (std::size_t i = 0; i < r.paths.size(); ++i) {
            if (i) paths += ", ";
            paths += path_text(r.paths[i]);
        }
        paths += '}';
        out.push_back(std::move(paths));
    }
    return out;
}

std::vector<std::string> error_lines(const ErrorBody& e) {
    return {"ERROR " + e.code, "Detail: " + quote(e.detail)};
}

std::string attrs_text(const AttrMap& attrs) {
    std::string out = "{";
    bool first = true;
    for (const auto& [k, v] : attrs) {
        if (!first) out += ", ";
        out += k + ": " + value_text(v);
        first = false;
    }
    out += '}';
    return out;
}

std::vector<std::string> update_lines(const UpdateBody& u) {
    std::vector<std::string> out;
    out.push_back("UPDATE APPLY");
    for (const WireAddNode& n : u.add_nodes) {
        std::string line = "ADD_NODE: {id: " + n.id + ", type: " + n.type + ", name: " +
                           quote(n.name);
        if (!n.attrs.empty()) line += ", attrs: " + attrs_text(n.attrs);
        line += '}';
        out.push_back(std::move(line));
    }
    for (const WireAddEdge& e : u.add_edges) {
        std::string line = "ADD_EDGE: {from: " + e.from + ", to: " + e.to + ", type: " + e.type +
                           ", weight: " + format_double(e.weight);
        if (e.confidence) line += ", confidence: " + format_double(*e.confidence);
        if (e.ts) line += ", ts: " + format_rfc3339(*e.ts);
        line += '}';
        out.push_back(std::move(line));
    }
    for (const EdgeId& id : u.del_edges) out.push_back("DEL_EDGE: " + id);
    for (const NodeId& id : u.del_nodes) out.push_back("DEL_NODE: " + id);
    return out;
}

std::vector<std::string> payload_lines(const Payload& p) {
    if (const auto* t = std::get_if<TraverseOp>(&p)) return traverse_lines(*t);
    if (const auto* u = std::get_if<UpdateBody>(&p)) return update_lines(*u);
    if (const auto* r = std::get_if<ResultBody>(&p)) return result_lines(*r);
    return error_lines(std::get<ErrorBody>(p));
}

// ---------------------------------------------------------------------------
// Parsing

struct Line {
    std::string text;  // trimmed
    int number = 0;    // 1-based
    int indent = 0;    // leading whitespace width in the physical line
};

class Parser {
public:
    explicit Parser(const std::string& text) {
        int no = 0;
        for (const std::string& raw : split_lines(text)) {
            ++no;
            std::string t = trim(raw);
            if (t.empty()) continue;
            int indent = 0;
            while (indent < static_cast<int>(raw.size()) &&
                   (raw[indent] == ' ' || raw[indent] == '\t'))
                ++indent;
            lines_.push_back({std::move(t), no, indent});
        }
    }

    Message run() {
        Message m;
        parse_header(m);
        m.performative = parse_performative();
        m.conversation = parse_kv("CONVERSATION");
        expect_exact("OPERATION:");
        m.payload = parse_payload();
        if (pos_ < lines_.size())
            fail(lines_[pos_], 0, {"end of message"}, "unexpected trailing content");
        return m;
    }

private:
    [[noreturn]] void fail(const Line& ln, int offset, std::vector<std::string> expected,
                           const std::string& why) {
        throw ParseError(ln.number, ln.indent + offset + 1, std::move(expected), why);
    }

    [[noreturn]] void fail_eof(std::vector<std::string> expected) {
        int last = lines_.empty() ? 1 : lines_.back().number;
        throw ParseError(last + 1, 1, std::move(expected), "unexpected end of message");
    }

    const Line& next(const std::vector<std::string>& expected) {
        if (pos_ >= lines_.size()) fail_eof(expected);
        return lines_[pos_++];
    }

    const Line* peek() const { return pos_ < lines_.size() ? &lines_[pos_] : nullptr; }

    void parse_header(Message& m) {
        const Line& ln = next({"<sender> TO <receiver>"});
        auto at = ln.text.find(" TO ");
        if (at == std::string::npos)
            fail(ln, 0, {"<sender> TO <receiver>"}, "malformed header line");
        m.sender = ln.text.substr(0, at);
        m.receiver = trim(ln.text.substr(at + 4));
        if (!is_ident(m.sender)) fail(ln, 0, {"agent identifier"}, "bad sender identifier");
        if (!is_ident(m.receiver))
            fail(ln, static_cast<int>(at) + 4, {"agent identifier"}, "bad receiver identifier");
    }

    Performative parse_performative() {
        const Line& ln = next({"PERFORMATIVE:"});
        if (!starts_with(ln.text, "PERFORMATIVE: "))
            fail(ln, 0, {"PERFORMATIVE:"}, "expected performative line");
        const std::string v = trim(ln.text.substr(14));
        for (std::size_t i = 0; i < kPerformatives.size(); ++i)
            if (v == kPerformatives[i]) return static_cast<Performative>(i);
        fail(ln, 14, kPerformatives, "unknown performative '" + v + "'");
    }

    std::string parse_kv(const std::string& key) {
        const Line& ln = next({key + ":"});
        if (!starts_with(ln.text, key + ": "))
            fail(ln, 0, {key + ":"}, "expected " + key + " line");
        std::string v = trim(ln.text.substr(key.size() + 2));
        if (!is_ident(v)) fail(ln, static_cast<int>(key.size()) + 2, {"identifier"},
                               "bad " + key + " value '" + v + "'");
        return v;
    }

    void expect_exact(const std::string& text) {
        const Line& ln = next({text});
        if (ln.text != text) fail(ln, 0, {text}, "expected '" + text + "'");
    }

    Payload parse_payload() {
        const Line& ln = next({"TRAVERSE", "UPDATE APPLY", "RESULT", "ERROR"});
        if (ln.text == "TRAVERSE") return parse_traverse();
        if (ln.text == "UPDATE APPLY") return parse_update();
        if (starts_with(ln.text, "RESULT ")) return parse_result(ln);
        if (starts_with(ln.text, "ERROR ")) return parse_error(ln);
        fail(ln, 0, {"TRAVERSE", "UPDATE APPLY", "RESULT", "ERROR"},
             "unknown operation body '" + ln.text + "'");
    }

    std::string field(const std::string& key) {
        const Line& ln = next({key + ":"});
        if (!starts_with(ln.text, key + ": ")) fail(ln, 0, {key + ":"}, "expected " + key);
        return trim(ln.text.substr(key.size() + 2));
    }

    TraverseOp parse_traverse() {
        TraverseOp op;
        op.from = parse_selector(field("FROM"), lines_[pos_ - 1]);
        {
            const std::string via = field("VIA");
            const Line& ln = lines_[pos_ - 1];
            for (const std::string& t : parse_braced_idents(via, ln)) op.via.insert(t);
        }
        {
            const std::string d = field("DEPTH");
            const Line& ln = lines_[pos_ - 1];
            if (d == "UNBOUNDED") {
                op.depth = Depth::unbounded_depth();
            } else {
                int v = 0;
                auto res = std::from_chars(d.data(), d.data() + d.size(), v);
                if (res.ec != std::errc{} || res.ptr != d.data() + d.size())
                    fail(ln, 7, {"non-negative integer", "UNBOUNDED"}, "bad depth '" + d + "'");
                op.depth = Depth::bounded(v);
            }
        }
        {
            const std::string r = field("RETURN");
            const Line& ln = lines_[pos_ - 1];
            if (r == "SUBGRAPH") op.ret = ReturnFormat::Subgraph;
            else if (r == "PATHS") op.ret = ReturnFormat::Paths;
            else if (r == "LEAVES") op.ret = ReturnFormat::Leaves;
            else fail(ln, 8, {"SUBGRAPH", "PATHS", "LEAVES"}, "bad return format '" + r + "'");
        }
        if (const Line* ln = peek(); ln && starts_with(ln->text, "CONSTRAINTS: ")) {
            ++pos_;
            op.constraints = parse_predicate(trim(ln->text.substr(13)), *ln);
        }
        return op;
    }

    // Splits "a, b, c" at top-level commas, honouring quotes and nesting.
    std::vector<std::string> split_elements(const std::string& s, const Line& ln) {
        std::vector<std::string> out;
        int depth = 0;
        bool in_quote = false;
        std::string cur;
        for (std::size_t i = 0; i < s.size(); ++i) {
            char c = s[i];
            if (in_quote) {
                cur += c;
                if (c == '\\' && i + 1 < s.size()) cur += s[++i];
                else if (c == '"') in_quote = false;
                continue;
            }
            if (c == '"') {
                in_quote = true;
                cur += c;
            } else if (c == '{' || c == '[') {
                ++depth;
                cur += c;
            } else if (c == '}' || c == ']') {
                --depth;
                cur += c;
            } else if (c == ',' && depth == 0) {
                out.push_back(trim(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (in_quote) fail(ln, 0, {"closing quote"}, "unterminated string");
        if (depth != 0) fail(ln, 0, {"balanced braces"}, "unbalanced braces");
        if (!trim(cur).empty()) out.push_back(trim(cur));
        return out;
    }

    std::string strip_braces(const std::string& s, const Line& ln, int offset) {
        if (s.size() < 2 || s.front() != '{' || s.back() != '}')
            fail(ln, offset, {"{"}, "expected braced set, got '" + s + "'");
        return s.substr(1, s.size() - 2);
    }

    std::vector<std::string> parse_braced_idents(const std::string& s, const Line& ln) {
        std::vector<std::string> out;
        for (const std::string& e : split_elements(strip_braces(s, ln, 0), ln)) {
            if (!is_ident(e)) fail(ln, 0, {"identifier"}, "bad identifier '" + e + "'");
            out.push_back(e);
        }
        return out;
    }

    NodeSelector parse_selector(const std::string& s, const Line& ln) {
        const std::string inner = strip_braces(s, ln, 6);
        auto elements = split_elements(inner, ln);
        NodeSelector sel;
        if (elements.empty()) return sel;  // empty explicit set
        const std::string& first = elements.front();
        if (first.find(" WHERE ") != std::string::npos) {
            if (elements.size() != 1)
                fail(ln, 0, {"single property filter"}, "property filters cannot be combined");
            auto at = first.find(" WHERE ");
            sel.kind = SelectorKind::PropertyFilter;
            sel.filter_type = trim(first.substr(0, at));
            if (!is_ident(sel.filter_type))
                fail(ln, 0, {"type label"}, "bad filter type '" + sel.filter_type + "'");
            sel.predicate = parse_predicate(trim(first.substr(at + 7)), ln);
            return sel;
        }
        if (starts_with(first, "type=")) {
            sel.kind = SelectorKind::ByType;
            for (const std::string& e : elements) {
                if (!starts_with(e, "type="))
                    fail(ln, 0, {"type=<label>"}, "mixed selector element '" + e + "'");
                std::string t = e.substr(5);
                if (!is_ident(t)) fail(ln, 0, {"type label"}, "bad type '" + t + "'");
                sel.types.push_back(std::move(t));
            }
            return sel;
        }
        if (starts_with(first, "name=")) {
            sel.kind = SelectorKind::ByName;
            for (const std::string& e : elements) {
                if (!starts_with(e, "name="))
                    fail(ln, 0, {"name=\"...\""}, "mixed selector element '" + e + "'");
                sel.names.push_back(unquote(e.substr(5)));
            }
            return sel;
        }
        bool allcaps = std::all_of(first.begin(), first.end(), [](char c) {
            return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
        });
        if (allcaps && first.find(':') == std::string::npos && !first.empty() &&
            first[0] >= 'A' && first[0] <= 'Z') {
            if (elements.size() != 1)
                fail(ln, 0, {"single context symbol"}, "context refs cannot be combined");
            sel.kind = SelectorKind::ContextRef;
            sel.symbol = first;
            return sel;
        }
        sel.kind = SelectorKind::ExplicitIds;
        for (const std::string& e : elements) {
            if (!is_ident(e)) fail(ln, 0, {"node id"}, "bad node id '" + e + "'");
            sel.ids.push_back(e);
        }
        return sel;
    }

    AttrValue parse_value(const std::string& v, const Line& ln) {
        if (!v.empty() && v.front() == '"') return unquote(v);
        if (v == "true") return true;
        if (v == "false") return false;
        std::int64_t i = 0;
        auto ri = std::from_chars(v.data(), v.data() + v.size(), i);
        if (ri.ec == std::errc{} && ri.ptr == v.data() + v.size()) return i;
        char* end = nullptr;
        double d = std::strtod(v.c_str(), &end);
        if (end == v.c_str() + v.size() && !v.empty()) return d;
        fail(ln, 0, {"string", "number", "bool"}, "bad value '" + v + "'");
    }

    Predicate parse_predicate(const std::string& s, const Line& ln) {
        Predicate p;
        std::size_t start = 0;
        std::vector<std::string> parts;
        while (true) {
            auto at = s.find(" AND ", start);
            if (at == std::string::npos) {
                parts.push_back(trim(s.substr(start)));
                break;
            }
            parts.push_back(trim(s.substr(start, at - start)));
            start = at + 5;
        }
        for (const std::string& part : parts) {
            static const std::vector<std::pair<std::string, CmpOp>> kOps = {
                {">=", CmpOp::Ge}, {"<=", CmpOp::Le}, {"!=", CmpOp::Ne},
                {"=", CmpOp::Eq},  {"<", CmpOp::Lt}, {">", CmpOp::Gt}};
            Comparison cmp;
            std::size_t op_at = std::string::npos;
            std::size_t op_len = 0;
            for (const auto& [text, op] : kOps) {
                auto at = part.find(text);
                if (at != std::string::npos && (op_at == std::string::npos || at < op_at ||
                                                (at == op_at && text.size() > op_len))) {
                    op_at = at;
                    op_len = text.size();
                    cmp.op = op;
                }
            }
            if (op_at == std::string::npos)
                fail(ln, 0, {"comparison operator"}, "no operator in '" + part + "'");
            cmp.attr = trim(part.substr(0, op_at));
            if (!is_ident(cmp.attr)) fail(ln, 0, {"attribute name"}, "bad attribute name");
            cmp.value = parse_value(trim(part.substr(op_at + op_len)), ln);
            p.all.push_back(std::move(cmp));
        }
        return p;
    }

    WireEdge parse_wire_edge(const std::string& s, const Line& ln) {
        auto a = s.find(" -[");
        auto b = s.find("]-> ");
        if (a == std::string::npos || b == std::string::npos || b < a)
            fail(ln, 0, {"<from> -[<type>]-> <to>"}, "bad edge '" + s + "'");
        WireEdge e;
        e.from = trim(s.substr(0, a));
        e.type = trim(s.substr(a + 3, b - a - 3));
        e.to = trim(s.substr(b + 4));
        if (!is_ident(e.from) || !is_ident(e.type) || !is_ident(e.to))
            fail(ln, 0, {"<from> -[<type>]-> <to>"}, "bad edge '" + s + "'");
        return e;
    }

    WirePath parse_path(const std::string& s, const Line& ln) {
        WirePath p;
        std::size_t pos = 0;
        auto first_arrow = s.find(" -[", pos);
        if (first_arrow == std::string::npos)
            fail(ln, 0, {"path"}, "path without edges '" + s + "'");
        NodeId cur = trim(s.substr(0, first_arrow));
        pos = first_arrow;
        while (pos < s.size()) {
            if (s.compare(pos, 3, " -[") != 0)
                fail(ln, static_cast<int>(pos), {" -["}, "bad path step");
            auto close = s.find("]-> ", pos);
            if (close == std::string::npos) fail(ln, static_cast<int>(pos), {"]-> "}, "bad path");
            std::string type = trim(s.substr(pos + 3, close - pos - 3));
            auto next_arrow = s.find(" -[", close + 4);
            NodeId to = trim(s.substr(close + 4, next_arrow == std::string::npos
                                                     ? std::string::npos
                                                     : next_arrow - close - 4));
            if (!is_ident(cur) || !is_ident(type) || !is_ident(to))
                fail(ln, static_cast<int>(pos), {"path step"}, "bad path '" + s + "'");
            p.steps.push_back({cur, type, to});
            cur = to;
            if (next_arrow == std::string::npos) break;
            pos = next_arrow;
        }
        return p;
    }

    ResultBody parse_result(const Line& head) {
        ResultBody r;
        const std::string fmt = trim(head.text.substr(7));
        if (fmt == "SUBGRAPH") r.format = ReturnFormat::Subgraph;
        else if (fmt == "PATHS") r.format = ReturnFormat::Paths;
        else if (fmt == "LEAVES") r.format = ReturnFormat::Leaves;
        else fail(head, 7, {"SUBGRAPH", "PATHS", "LEAVES"}, "bad result format '" + fmt + "'");
        {
            const std::string nodes = field("Nodes");
            const Line& ln = lines_[pos_ - 1];
            for (const std::string& e :
                 split_elements(strip_braces(nodes, ln, 7), ln)) {
                if (!is_ident(e)) fail(ln, 0, {"node id"}, "bad node id '" + e + "'");
                r.nodes.push_back(e);
            }
        }
        {
            const std::string edges = field("Edges");
            const Line& ln = lines_[pos_ - 1];
            for (const std::string& e : split_elements(strip_braces(edges, ln, 7), ln))
                r.edges.push_back(parse_wire_edge(e, ln));
        }
        if (const Line* ln = peek(); ln && starts_with(ln->text, "Confidence: ")) {
            ++pos_;
            std::string list = trim(ln->text.substr(12));
            if (list.size() < 2 || list.front() != '[' || list.back() != ']')
                fail(*ln, 12, {"[<float>, ...]"}, "bad confidence list");
            for (const std::string& v : split_elements(list.substr(1, list.size() - 2), *ln)) {
                char* end = nullptr;
                double d = std::strtod(v.c_str(), &end);
                if (end != v.c_str() + v.size() || v.empty())
                    fail(*ln, 0, {"float"}, "bad confidence value '" + v + "'");
                r.confidence.push_back(d);
            }
        }
        if (const Line* ln = peek(); ln && starts_with(ln->text, "Paths: ")) {
            ++pos_;
            for (const std::string& e :
                 split_elements(strip_braces(trim(ln->text.substr(7)), *ln, 7), *ln))
                r.paths.push_back(parse_path(e, *ln));
        }
        return r;
    }

    ErrorBody parse_error(const Line& head) {
        ErrorBody e;
        e.code = trim(head.text.substr(6));
        if (!is_ident(e.code)) fail(head, 6, {"error code"}, "bad error code '" + e.code + "'");
        const std::string detail = field("Detail");
        const Line& ln = lines_[pos_ - 1];
        if (detail.empty() || detail.front() != '"')
            fail(ln, 8, {"quoted string"}, "detail must be quoted");
        e.detail = unquote(detail);
        return e;
    }

    std::map<std::string, std::string> parse_object(const std::string& s, const Line& ln,
                                                    int offset) {
        std::map<std::string, std::string> out;
        for (const std::string& e : split_elements(strip_braces(s, ln, offset), ln)) {
            auto at = e.find(": ");
            if (at == std::string::npos)
                fail(ln, offset, {"key: value"}, "bad object field '" + e + "'");
            out[trim(e.substr(0, at))] = trim(e.substr(at + 2));
        }
        return out;
    }

    UpdateBody parse_update() {
        UpdateBody u;
        static const std::vector<std::string> kItems = {"ADD_NODE:", "ADD_EDGE:", "DEL_EDGE:",
                                                        "DEL_NODE:"};
        while (const Line* ln = peek()) {
            if (starts_with(ln->text, "ADD_NODE: ")) {
                ++pos_;
                auto obj = parse_object(trim(ln->text.substr(10)), *ln, 10);
                WireAddNode n;
                n.id = obj.count("id") ? obj["id"] : "";
                n.type = obj.count("type") ? obj["type"] : "";
                if (obj.count("name")) n.name = unquote(obj["name"]);
                if (!is_ident(n.id) || !is_ident(n.type))
                    fail(*ln, 10, {"id", "type"}, "ADD_NODE needs id and type");
                if (obj.count("attrs"))
                    for (const auto& [k, v] : parse_object(obj["attrs"], *ln, 10))
                        n.attrs[k] = parse_value(v, *ln);
                u.add_nodes.push_back(std::move(n));
            } else if (starts_with(ln->text, "ADD_EDGE: ")) {
                ++pos_;
                auto obj = parse_object(trim(ln->text.substr(10)), *ln, 10);
                WireAddEdge e;
                e.from = obj.count("from") ? obj["from"] : "";
                e.to = obj.count("to") ? obj["to"] : "";
                e.type = obj.count("type") ? obj["type"] : "";
                if (!is_ident(e.from) || !is_ident(e.to) || !is_ident(e.type))
                    fail(*ln, 10, {"from", "to", "type"}, "ADD_EDGE needs from, to, type");
                if (obj.count("weight")) {
                    AttrValue v = parse_value(obj["weight"], *ln);
                    e.weight = std::holds_alternative<double>(v)
                                   ? std::get<double>(v)
                                   : static_cast<double>(std::get<std::int64_t>(v));
                }
                if (obj.count("confidence")) {
                    AttrValue v = parse_value(obj["confidence"], *ln);
                    e.confidence = std::holds_alternative<double>(v)
                                       ? std::get<double>(v)
                                       : static_cast<double>(std::get<std::int64_t>(v));
                }
                if (obj.count("ts")) e.ts = parse_rfc3339(obj["ts"]);
                u.add_edges.push_back(std::move(e));
            } else if (starts_with(ln->text, "DEL_EDGE: ")) {
                ++pos_;
                std::string id = trim(ln->text.substr(10));
                if (!is_ident(id)) fail(*ln, 10, {"edge id"}, "bad edge id '" + id + "'");
                u.del_edges.push_back(std::move(id));
            } else if (starts_with(ln->text, "DEL_NODE: ")) {
                ++pos_;
                std::string id = trim(ln->text.substr(10));
                if (!is_ident(id)) fail(*ln, 10, {"node id"}, "bad node id '" + id + "'");
                u.del_nodes.push_back(std::move(id));
            } else {
                break;
            }
        }
        return u;
    }

    std::vector<Line> lines_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize(const Message& m) {
    std::string out = m.sender + " TO " + m.receiver + "\n";
    out += "PERFORMATIVE: " + std::string(to_string(m.performative)) + "\n";
    out += "CONVERSATION: " + m.conversation + "\n";
    out += "OPERATION:\n";
    const auto lines = payload_lines(m.payload);
    for (std::size_t i = 0; i < lines.size(); ++i)
        out += (i == 0 ? "  " : "    ") + lines[i] + "\n";
    return out;
}

std::string payload_text(const Payload& p) {
    std::string out;
    for (const std::string& line : payload_lines(p)) out += line + "\n";
    return out;
}

ResultBody update_receipt(const UpdateBody& body) {
    ResultBody r;
    r.format = ReturnFormat::Subgraph;
    std::set<NodeId> nodes;
    for (const WireAddNode& n : body.add_nodes) nodes.insert(n.id);
    std::set<std::tuple<NodeId, std::string, NodeId>> edges;
    for (const WireAddEdge& e : body.add_edges) {
        edges.insert({e.from, e.type, e.to});
        nodes.insert(e.from);  // endpoints ride along so the receipt is self-contained
        nodes.insert(e.to);
    }
    r.nodes.assign(nodes.begin(), nodes.end());
    for (const auto& [f, t, to] : edges) r.edges.push_back({f, t, to});
    r.confidence.assign(r.nodes.size(), 1.0);
    return r;
}

ErrorBody update_rejection(const Violation& first) {
    return {kErrSchemaViolation, first.code + ": " + first.detail};
}

Message parse(const std::string& text) { return Parser(text).run(); }

Payload parse_payload_text(const std::string& text) {
    // The line parser is indentation-insensitive, so a minimal header turns a
    // bare payload back into a parseable message.
    const std::string wrapped =
        "X TO Y\nPERFORMATIVE: INFORM\nCONVERSATION: c\nOPERATION:\n" + text;
    return Parser(wrapped).run().payload;
}

std::vector<Violation> validate(const Message& m) {
    std::vector<Violation> out;
    if (m.sender.empty() || !is_ident(m.sender))
        out.push_back({"BAD_SENDER", "sender must be a non-empty identifier"});
    if (m.receiver.empty() || !is_ident(m.receiver))
        out.push_back({"BAD_RECEIVER", "receiver must be a non-empty identifier"});
    if (m.conversation.empty() || !is_ident(m.conversation))
        out.push_back({"BAD_CONVERSATION", "conversation must be a non-empty identifier"});

    const bool is_traverse = std::holds_alternative<TraverseOp>(m.payload);
    const bool is_update = std::holds_alternative<UpdateBody>(m.payload);
    const bool is_result = std::holds_alternative<ResultBody>(m.payload);
    const bool is_error = std::holds_alternative<ErrorBody>(m.payload);

    switch (m.performative) {
        case Performative::Request:
        case Performative::Query:
        case Performative::Propose:
            if (!is_traverse)
                out.push_back({"PAYLOAD_MISMATCH",
                               std::string(to_string(m.performative)) +
                                   " carries a traversal operation"});
            if (m.sender == m.receiver)
                out.push_back({"SELF_ADDRESSED", std::string(to_string(m.performative)) +
                                                     " cannot be self-addressed"});
            break;
        case Performative::Update:
            if (!is_update)
                out.push_back({"PAYLOAD_MISMATCH", "UPDATE carries a graph delta"});
            break;
        case Performative::Inform:
        case Performative::Confirm:
            if (!is_result && !is_error)
                out.push_back({"PAYLOAD_MISMATCH",
                               std::string(to_string(m.performative)) +
                                   " carries a result or error"});
            break;
        case Performative::Reject:
            if (!is_error && !is_traverse)
                out.push_back({"PAYLOAD_MISMATCH",
                               "REJECT carries an error or echoes the rejected operation"});
            break;
    }

    if (const auto* t = std::get_if<TraverseOp>(&m.payload)) {
        if (t->via.empty()) out.push_back({"EMPTY_VIA", "traversal needs at least one edge type"});
        for (const std::string& v : t->via)
            if (!is_ident(v)) out.push_back({"BAD_EDGE_TYPE", "bad via entry '" + v + "'"});
        if (!t->depth.unbounded && t->depth.hops < 0)
            out.push_back({"NEGATIVE_DEPTH", "depth must be >= 0"});
    }
    if (const auto* r = std::get_if<ResultBody>(&m.payload)) {
        std::set<NodeId> nodes(r->nodes.begin(), r->nodes.end());
        for (const WireEdge& e : r->edges)
            if (!nodes.count(e.from) || !nodes.count(e.to))
                out.push_back({"EDGE_ENDPOINT", "edge " + wire_edge_text(e) +
                                                    " references a node outside the node list"});
        if (r->confidence.size() != r->nodes.size())
            out.push_back({"CONFIDENCE_ARITY", "confidence list must align with nodes"});
        if (!r->paths.empty() && r->format != ReturnFormat::Paths)
            out.push_back({"PATHS_FORMAT", "paths present on a non-PATHS result"});
        for (const WirePath& p : r->paths)
            for (std::size_t i = 1; i < p.steps.size(); ++i)
                if (p.steps[i].from != p.steps[i - 1].to)
                    out.push_back({"PATH_DISCONTINUOUS", "path steps do not chain"});
    }
    if (const auto* e = std::get_if<ErrorBody>(&m.payload)) {
        if (e->code.empty()) out.push_back({"EMPTY_ERROR_CODE", "error code required"});
    }
    return out;
}

int token_count(const std::string& text) {
    int count = 0;
    std::size_t i = 0;
    const std::size_t n = text.size();
    auto is_word = [](unsigned char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
               c == '_';
    };
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            ++i;
            continue;
        }
        if (is_word(c)) {
            ++count;
            while (i < n && is_word(static_cast<unsigned char>(text[i]))) ++i;
            continue;
        }
        // One token per separator code point.
        ++count;
        ++i;
        while (i < n && (static_cast<unsigned char>(text[i]) & 0xC0) == 0x80) ++i;
    }
    return count;
}

}  // namespace g2cp
