#include "alchemy/metrics.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace alchemy {

MotifSet::MotifSet(std::vector<Motif> motifs) : motifs_(std::move(motifs)) {
    std::unordered_set<std::string> seen;
    for (const auto& m : motifs_) {
        if (m.label.empty() || m.label == "collision" || m.label == "soup_size")
            throw std::invalid_argument("reserved or empty motif label '" + m.label + "'");
        if (m.label.find_first_of(",\n\r") != std::string::npos)
            throw std::invalid_argument("motif label must not contain separators");
        if (!seen.insert(m.label).second) throw std::invalid_argument("duplicate motif label '" + m.label + "'");
    }
}

std::vector<std::string> MotifSet::labels() const {
    std::vector<std::string> out;
    for (const auto& m : motifs_) out.push_back(m.label);
    return out;
}

PopulationRecord MotifSet::measure(const Soup& soup) const {
    PopulationRecord r;
    r.collision_index = soup.collisions();
    r.soup_size = soup.size();
    for (const auto& m : motifs_) r.counts.emplace_back(m.label, count_motif(soup, m.reference));
    return r;
}

std::uint64_t count_motif(const Soup& soup, const std::variant<Expr, AmplifierMotif>& reference) {
    if (auto e = std::get_if<Expr>(&reference)) return soup.count(*e);
    const auto& motif = std::get<AmplifierMotif>(reference);
    if (!motif.family) return soup.amplifier_count();
    std::uint64_t n = 0;
    const auto& specs = soup.amplifier_specs();
    for (std::size_t i = 0; i < specs.size(); ++i)
        if (family_of(specs[i]->test) == motif.family) n += soup.amplifier_count(i);
    return n;
}

namespace {

double fraction_of(const PopulationRecord& r, const std::string& label) {
    auto c = r.count(label);
    if (!c) throw MetricsError("unknown label '" + label + "'");
    if (r.soup_size == 0) throw MetricsError("record with empty soup");
    return static_cast<double>(*c) / static_cast<double>(r.soup_size);
}

}  // namespace

bool threshold_fraction(std::span<const PopulationRecord> records, const std::string& label, double threshold) {
    if (records.empty()) throw MetricsError("no records");
    if (threshold < 0.0 || threshold > 1.0) throw MetricsError("threshold outside [0, 1]");
    const auto& last = records.back();
    return fraction_of(last, label) >= threshold;
}

double time_averaged_population(std::span<const PopulationRecord> records, const std::string& label) {
    if (records.empty()) throw MetricsError("no records");
    double sum = 0;
    for (const auto& r : records) sum += fraction_of(r, label);
    return sum / static_cast<double>(records.size());
}

void write_csv(std::ostream& out, std::span<const PopulationRecord> records, const std::vector<std::string>& labels) {
    out << "collision";
    for (const auto& l : labels) out << ',' << l;
    out << ",soup_size\n";
    for (const auto& r : records) {
        out << r.collision_index;
        for (const auto& l : labels) {
            auto c = r.count(l);
            if (!c) throw MetricsError("record lacks label '" + l + "'");
            out << ',' << *c;
        }
        out << ',' << r.soup_size << '\n';
    }
}

std::string to_csv(std::span<const PopulationRecord> records, const std::vector<std::string>& labels) {
    std::ostringstream s;
    write_csv(s, records, labels);
    return s.str();
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::uint64_t number(const std::string& s, std::size_t line) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw MetricsError("bad number '" + s + "' on line " + std::to_string(line));
    return v;
}

}  // namespace

CsvSeries read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw MetricsError("empty CSV");
    auto header = split(line);
    if (header.size() < 2 || header.front() != "collision" || header.back() != "soup_size")
        throw MetricsError("CSV header must be collision,<labels...>,soup_size");
    CsvSeries s;
    s.labels.assign(header.begin() + 1, header.end() - 1);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != header.size())
            throw MetricsError("wrong number of columns on line " + std::to_string(lineno));
        PopulationRecord r;
        r.collision_index = number(cells.front(), lineno);
        r.soup_size = number(cells.back(), lineno);
        for (std::size_t k = 0; k < s.labels.size(); ++k) r.counts.emplace_back(s.labels[k], number(cells[k + 1], lineno));
        s.records.push_back(std::move(r));
    }
    return s;
}

CsvSeries read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MetricsError("cannot open " + path);
    return read_csv(in);
}

}  // namespace alchemy
