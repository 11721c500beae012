#include "hazeforge/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace hazeforge {

namespace {

std::string num(real v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(v));
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string manifest_dir(const std::string& manifest_path) {
    fs::path p(manifest_path);
    auto dir = p.parent_path();
    return dir.empty() ? std::string(".") : dir.string();
}

void save_manifest(const Manifest& m, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw io_error("cannot write manifest: " + path);
    f << "# hazeforge-manifest seed=" << m.seed << " split=" << m.split
      << " count=" << m.records.size() << " A=[" << num(m.a_min) << "," << num(m.a_max)
      << "] beta=[" << num(m.beta_min) << "," << num(m.beta_max) << "]\n";
    f << "id,clear_path,depth_path,hazy_path,trans_path,A_r,A_g,A_b,beta\n";
    for (const auto& r : m.records) {
        f << r.id << "," << r.clear_path << "," << r.depth_path << "," << r.hazy_path << ","
          << r.trans_path << "," << num(r.a_r) << "," << num(r.a_g) << "," << num(r.a_b) << ","
          << num(r.beta) << "\n";
    }
    if (!f) throw io_error("manifest write failed: " + path);
}

Manifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open manifest: " + path);
    Manifest m;
    std::string line;
    if (!std::getline(f, line) || line.rfind("# hazeforge-manifest", 0) != 0)
        throw format_error("not a hazeforge manifest: " + path);
    {
        std::istringstream hs(line.substr(std::string("# hazeforge-manifest").size()));
        std::string tok;
        while (hs >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = tok.substr(0, eq);
            const std::string val = tok.substr(eq + 1);
            if (key == "seed") m.seed = std::stoull(val);
            else if (key == "split") m.split = val;
            else if (key == "A" || key == "beta") {
                // "[lo,hi]"
                auto comma = val.find(',');
                if (val.size() < 5 || comma == std::string::npos)
                    throw format_error("manifest: bad range " + tok);
                const real lo = static_cast<real>(std::stod(val.substr(1, comma - 1)));
                const real hi = static_cast<real>(std::stod(val.substr(comma + 1, val.size() - comma - 2)));
                if (key == "A") {
                    m.a_min = lo;
                    m.a_max = hi;
                } else {
                    m.beta_min = lo;
                    m.beta_max = hi;
                }
            }
        }
    }
    if (!std::getline(f, line)) throw format_error("manifest: missing column header");

    const std::string dir = manifest_dir(path);
    std::set<std::string> seen;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto cols = split_csv(line);
        if (cols.size() != 9) throw format_error("manifest: bad record: " + line);
        ManifestRecord r;
        r.id = cols[0];
        r.clear_path = cols[1];
        r.depth_path = cols[2];
        r.hazy_path = cols[3];
        r.trans_path = cols[4];
        r.a_r = static_cast<real>(std::stod(cols[5]));
        r.a_g = static_cast<real>(std::stod(cols[6]));
        r.a_b = static_cast<real>(std::stod(cols[7]));
        r.beta = static_cast<real>(std::stod(cols[8]));
        if (!seen.insert(r.id).second) throw format_error("manifest: duplicate id " + r.id);
        for (const std::string* p : {&r.clear_path, &r.depth_path, &r.hazy_path, &r.trans_path}) {
            if (!fs::exists(fs::path(dir) / *p))
                throw io_error("manifest references missing file: " + (fs::path(dir) / *p).string());
        }
        m.records.push_back(std::move(r));
    }
    return m;
}

}  // namespace hazeforge
