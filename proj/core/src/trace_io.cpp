#include "wfse/trace_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "wfse/errors.hpp"
#include "wfse/log.hpp"

namespace wfse {

namespace {

using nlohmann::json;

bool is_blank(const std::string& line) {
    for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) fields.push_back(line.substr(i, j - i));
        i = j;
    }
    return fields;
}

[[noreturn]] void parse_fail(const std::string& origin, std::size_t line_no, const std::string& what) {
    throw DataError(origin + ":" + std::to_string(line_no) + ": " + what);
}

double parse_time(const std::string& s, const std::string& origin, std::size_t line_no) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || p != end)
        parse_fail(origin, line_no, "bad timestamp '" + s + "'");
    return v;
}

Direction parse_direction(const std::string& s, const std::string& origin, std::size_t line_no) {
    if (s == "+1" || s == "1") return Direction::Outgoing;
    if (s == "-1") return Direction::Incoming;
    parse_fail(origin, line_no, "bad direction '" + s + "' (expected +1, 1 or -1)");
}

bool parse_dummy(const std::string& s, const std::string& origin, std::size_t line_no) {
    if (s == "0") return false;
    if (s == "1") return true;
    parse_fail(origin, line_no, "bad is_dummy flag '" + s + "' (expected 0 or 1)");
}

void write_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    out += buf;
}

} // namespace

Trace parse_trace(std::istream& in, const std::string& origin) {
    Trace trace;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line)) continue;
        std::size_t first = line.find_first_not_of(" \t");
        if (first != std::string::npos && line[first] == '#') continue;

        const auto fields = split_fields(line);
        if (fields.size() < 2 || fields.size() > 3)
            parse_fail(origin, line_no, "expected '<time> <dir> [<is_dummy>]', got " +
                                            std::to_string(fields.size()) + " fields");
        TraceEvent e;
        e.time = parse_time(fields[0], origin, line_no);
        e.direction = parse_direction(fields[1], origin, line_no);
        if (fields.size() == 3) e.is_dummy = parse_dummy(fields[2], origin, line_no);
        trace.events.push_back(e);
    }
    if (trace.events.empty()) throw DataError(origin + ": trace file contains no packets");
    return trace;
}

Trace parse_trace_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    return parse_trace(in, origin);
}

Trace load_trace_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trace file " + path.string());
    return parse_trace(in, path.string());
}

void save_trace_file(const std::filesystem::path& path, const Trace& trace,
                     bool with_dummy_column) {
    std::string out;
    out.reserve(trace.events.size() * 16);
    for (const TraceEvent& e : trace.events) {
        write_double(out, e.time);
        out += e.direction == Direction::Outgoing ? " +1" : " -1";
        if (with_dummy_column) out += e.is_dummy ? " 1" : " 0";
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write trace file " + path.string());
    f << out;
    if (!f) throw DataError("short write to " + path.string());
}

namespace {

struct ClassFiles {
    std::string name;
    std::vector<std::filesystem::path> files;
};

std::vector<ClassFiles> scan_layout(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    std::vector<ClassFiles> classes;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        ClassFiles cf;
        cf.name = entry.path().filename().string();
        for (const auto& f : fs::directory_iterator(entry.path())) {
            if (f.is_regular_file() && f.path().extension() == ".txt")
                cf.files.push_back(f.path());
        }
        std::sort(cf.files.begin(), cf.files.end());
        if (!cf.files.empty()) classes.push_back(std::move(cf));
    }
    std::sort(classes.begin(), classes.end(),
              [](const ClassFiles& a, const ClassFiles& b) { return a.name < b.name; });
    return classes;
}

std::vector<ClassFiles> read_manifest(const std::filesystem::path& root,
                                      const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw DataError("cannot open manifest " + manifest.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("manifest " + manifest.string() + ": " + e.what());
    }
    if (!doc.contains("classes") || !doc["classes"].is_array())
        throw DataError("manifest " + manifest.string() + ": missing 'classes' array");

    std::vector<ClassFiles> classes;
    for (const auto& c : doc["classes"]) {
        ClassFiles cf;
        cf.name = c.at("name").get<std::string>();
        for (const auto& f : c.at("files")) cf.files.push_back(root / f.get<std::string>());
        classes.push_back(std::move(cf));
    }
    return classes;
}

} // namespace

TraceDataset load_dataset(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw DataError("dataset root is not a directory: " + root.string());

    const fs::path manifest = root / "manifest.json";
    const auto classes = fs::exists(manifest) ? read_manifest(root, manifest) : scan_layout(root);
    if (classes.empty()) throw DataError("no class directories with traces under " + root.string());

    TraceDataset ds;
    for (std::size_t label = 0; label < classes.size(); ++label) {
        ds.class_names.push_back(classes[label].name);
        for (const auto& file : classes[label].files) {
            Trace raw = load_trace_file(file);
            raw.label = static_cast<int>(label);
            SanitizeResult s = sanitize(raw);
            if (auto* ok = std::get_if<Trace>(&s)) {
                ds.traces.push_back(std::move(*ok));
            } else {
                const RejectReason r = std::get<RejectReason>(s);
                if (r == RejectReason::EmptyTrace)
                    ++ds.rejected_empty;
                else
                    ++ds.rejected_incoming_first;
                log_debug("rejected " + file.string() + " (" + reject_reason_name(r) + ")");
            }
        }
    }
    if (ds.rejected_empty + ds.rejected_incoming_first > 0)
        log_info("sanitizer dropped " +
                 std::to_string(ds.rejected_empty + ds.rejected_incoming_first) + " trace(s)");
    if (ds.traces.empty()) throw DataError("all traces rejected under " + root.string());
    return ds;
}

void save_dataset(const std::filesystem::path& root, const TraceDataset& dataset) {
    namespace fs = std::filesystem;
    fs::create_directories(root);

    json manifest;
    manifest["classes"] = json::array();

    std::vector<std::vector<std::string>> files_per_class(dataset.num_classes());
    std::vector<std::size_t> counter(dataset.num_classes(), 0);

    for (const Trace& t : dataset.traces) {
        const auto label = static_cast<std::size_t>(t.label);
        const std::string& cls = dataset.class_names.at(label);
        char name[32];
        std::snprintf(name, sizeof name, "%06zu.txt", counter[label]++);
        const fs::path dir = root / cls;
        fs::create_directories(dir);
        save_trace_file(dir / name, t, /*with_dummy_column=*/true);
        files_per_class[label].push_back(cls + "/" + name);
    }

    for (std::size_t label = 0; label < dataset.num_classes(); ++label) {
        json c;
        c["name"] = dataset.class_names[label];
        c["files"] = files_per_class[label];
        manifest["classes"].push_back(c);
    }

    std::ofstream out(root / "manifest.json", std::ios::binary);
    if (!out) throw DataError("cannot write manifest under " + root.string());
    out << manifest.dump(2) << '\n';
}

} // namespace wfse
