#include <sodium.h>

#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>

#include "g2cp/config.hpp"
#include "g2cp/errors.hpp"
#include "g2cp/security.hpp"
#include "g2cp/strutil.hpp"

namespace g2cp {

namespace {

void ensure_sodium() {
    static const int rc = sodium_init();
    if (rc < 0) throw Error("libsodium initialisation failed");
}

std::string b64(const unsigned char* data, std::size_t len) {
    std::string out(sodium_base64_ENCODED_LEN(len, sodium_base64_VARIANT_ORIGINAL), '\0');
    sodium_bin2base64(out.data(), out.size(), data, len, sodium_base64_VARIANT_ORIGINAL);
    out.resize(std::string::traits_type::length(out.c_str()));
    return out;
}

std::vector<unsigned char> unb64(const std::string& text) {
    std::vector<unsigned char> out(text.size());
    std::size_t len = 0;
    if (sodium_base642bin(out.data(), out.size(), text.c_str(), text.size(), nullptr, &len,
                          nullptr, sodium_base64_VARIANT_ORIGINAL) != 0)
        return {};
    out.resize(len);
    return out;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    ensure_sodium();
    unsigned char digest[crypto_hash_sha256_BYTES];
    crypto_hash_sha256(digest, reinterpret_cast<const unsigned char*>(bytes.data()),
                       bytes.size());
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(sizeof(digest) * 2);
    for (unsigned char b : digest) {
        out += hex[b >> 4];
        out += hex[b & 0xF];
    }
    return out;
}

void KeyRing::add_agent(const AgentId& id) {
    ensure_sodium();
    if (keys_.count(id)) return;
    // Fixed id-derived seed keeps transcripts reproducible across runs.
    unsigned char seed[crypto_sign_SEEDBYTES];
    const std::string material = "g2cp-key:" + id;
    crypto_hash_sha256(seed, reinterpret_cast<const unsigned char*>(material.data()),
                       material.size());
    Pair p;
    crypto_sign_seed_keypair(p.pk.data(), p.sk.data(), seed);
    keys_[id] = p;
}

std::vector<unsigned char> KeyRing::sign(const AgentId& id, const std::string& bytes) const {
    auto it = keys_.find(id);
    if (it == keys_.end()) throw UnknownSender("no key for agent '" + id + "'");
    std::vector<unsigned char> sig(crypto_sign_BYTES);
    unsigned long long len = 0;
    crypto_sign_detached(sig.data(), &len, reinterpret_cast<const unsigned char*>(bytes.data()),
                         bytes.size(), it->second.sk.data());
    sig.resize(len);
    return sig;
}

bool KeyRing::verify(const AgentId& id, const std::string& bytes,
                     const std::vector<unsigned char>& sig) const {
    auto it = keys_.find(id);
    if (it == keys_.end()) return false;
    return crypto_sign_verify_detached(sig.data(),
                                       reinterpret_cast<const unsigned char*>(bytes.data()),
                                       bytes.size(), it->second.pk.data()) == 0;
}

std::string make_nonce(const ConversationId& conversation, std::uint64_t seq) {
    return conversation + ":" + std::to_string(seq);
}

std::string seal(const std::string& body, const AgentId& sender,
                 const ConversationId& conversation, std::uint64_t seq, const KeyRing& ring) {
    std::string covered = body;
    if (covered.empty() || covered.back() != '\n') covered += '\n';
    covered += "NONCE: " + make_nonce(conversation, seq) + "\n";
    const auto sig = ring.sign(sender, covered);
    std::string out = covered;
    out += "SIGNATURE: " + b64(sig.data(), sig.size()) + "\n";
    out += "KEYID: " + sender + "\n";
    return out;
}

Opened open_envelope(const std::string& envelope, const KeyRing& ring) {
    Opened res;
    const auto lines = split_lines(envelope);
    if (lines.size() < 4) {
        res.reason = "envelope too short";
        return res;
    }
    const std::string& key_line = lines[lines.size() - 1];
    const std::string& sig_line = lines[lines.size() - 2];
    if (!starts_with(key_line, "KEYID: ") || !starts_with(sig_line, "SIGNATURE: ")) {
        res.reason = "missing signature trailer";
        return res;
    }
    res.keyid = trim(key_line.substr(7));
    const auto sig = unb64(trim(sig_line.substr(11)));
    if (sig.empty()) {
        res.reason = "unparseable signature";
        return res;
    }

    std::string covered;
    std::string nonce_line;
    for (std::size_t i = 0; i + 2 < lines.size(); ++i) {
        covered += lines[i] + "\n";
        nonce_line = lines[i];
    }
    if (!starts_with(nonce_line, "NONCE: ")) {
        res.reason = "missing nonce";
        return res;
    }
    res.nonce = trim(nonce_line.substr(7));

    if (!ring.has(res.keyid)) {
        res.reason = "unknown key id '" + res.keyid + "'";
        return res;
    }
    if (!ring.verify(res.keyid, covered, sig)) {
        res.reason = "signature verification failed";
        return res;
    }

    // Body is everything covered except the trailing NONCE line.
    res.body = covered.substr(0, covered.size() - nonce_line.size() - 1);

    // The claimed key must belong to the sender named in the header.
    const auto eol = res.body.find('\n');
    const std::string header = eol == std::string::npos ? res.body : res.body.substr(0, eol);
    const auto at = header.find(" TO ");
    const std::string sender = at == std::string::npos ? "" : header.substr(0, at);
    if (sender != res.keyid) {
        res.reason = "key id does not match sender";
        return res;
    }
    res.ok = true;
    return res;
}

const AgentSpec& Roster::at(const AgentId& id) const {
    auto it = agents.find(id);
    if (it == agents.end()) throw UnknownSender("agent '" + id + "' is not in the roster");
    return it->second;
}

Roster load_roster(std::istream& in) {
    nlohmann::json j = nlohmann::json::parse(in);
    Roster r;
    for (const auto& a : j.at("agents")) {
        AgentSpec spec;
        spec.id = a.at("id").get<std::string>();
        spec.role = a.value("role", "");
        for (const auto& p : a.value("permissions", nlohmann::json::array())) {
            Permission perm;
            perm.action = p.at("action").get<std::string>();
            for (const auto& t : p.value("node_types", nlohmann::json::array()))
                perm.node_types.insert(t.get<std::string>());
            for (const auto& t : p.value("edge_types", nlohmann::json::array()))
                perm.edge_types.insert(t.get<std::string>());
            spec.permissions.push_back(std::move(perm));
        }
        r.agents[spec.id] = std::move(spec);
    }
    return r;
}

Roster load_roster_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open roster file: " + path);
    return load_roster(in);
}

namespace {

bool covered(const std::set<std::string>& needed,
             const std::vector<const Permission*>& grants,
             std::set<std::string> Permission::*field) {
    for (const std::string& t : needed) {
        bool ok = false;
        for (const Permission* p : grants) {
            const auto& types = p->*field;
            if (types.count("*") || types.count(t)) {
                ok = true;
                break;
            }
        }
        if (!ok) return false;
    }
    return true;
}

std::vector<const Permission*> grants_for(const AgentSpec& agent, const std::string& action) {
    std::vector<const Permission*> out;
    for (const Permission& p : agent.permissions)
        if (p.action == action) out.push_back(&p);
    return out;
}

}  // namespace

bool authorize_traverse(const AgentSpec& agent, const std::set<std::string>& source_types,
                        const std::set<std::string>& via) {
    auto grants = grants_for(agent, "TRAVERSE");
    if (grants.empty()) return false;
    return covered(source_types, grants, &Permission::node_types) &&
           covered(via, grants, &Permission::edge_types);
}

bool authorize_update(const AgentSpec& agent, const std::set<std::string>& node_types,
                      const std::set<std::string>& edge_types) {
    auto grants = grants_for(agent, "UPDATE");
    if (grants.empty()) return false;
    return covered(node_types, grants, &Permission::node_types) &&
           covered(edge_types, grants, &Permission::edge_types);
}

double TrustTracker::score(const AgentId& id) const {
    auto it = state_.find(id);
    return it == state_.end() ? kTrustInitial : it->second.score;
}

int TrustTracker::steps(const AgentId& id) const {
    auto it = state_.find(id);
    return it == state_.end() ? 0 : it->second.steps;
}

std::optional<TrustEvent> TrustTracker::record(const AgentId& id, bool verified) {
    auto& st = state_.try_emplace(id, State{kTrustInitial, 0}).first->second;
    st.score = kTrustAlpha * st.score + (1.0 - kTrustAlpha) * (verified ? 1.0 : 0.0);
    ++st.steps;
    if (st.score < kReviewThreshold) {
        TrustEvent ev{id, st.steps, st.score};
        events_.push_back(ev);
        return ev;
    }
    return std::nullopt;
}

}  // namespace g2cp
