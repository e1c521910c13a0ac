#include "sabon/artifacts.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "sabon/hash.hpp"

namespace sabon {

namespace {

// Short fixed-precision numbers keep the SVG files small and stable.
std::string fixed(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 2);
    return std::string(buf.data(), res.ptr);
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

// Piecewise-linear blue-white-red ramp for t in [0, 1].
std::string colour(double t) {
    t = std::clamp(t, 0.0, 1.0);
    static constexpr std::array<std::array<double, 3>, 5> stops{{
        {49, 54, 149}, {116, 173, 209}, {255, 255, 255}, {244, 109, 67}, {165, 0, 38}}};
    const double s = t * (stops.size() - 1);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(s), stops.size() - 2);
    const double u = s - static_cast<double>(k);
    std::array<char, 8> out{};
    std::snprintf(out.data(), out.size(), "#%02x%02x%02x",
                  static_cast<int>(std::lround(stops[k][0] + u * (stops[k + 1][0] - stops[k][0]))),
                  static_cast<int>(std::lround(stops[k][1] + u * (stops[k + 1][1] - stops[k][1]))),
                  static_cast<int>(std::lround(stops[k][2] + u * (stops[k + 1][2] - stops[k][2]))));
    return std::string(out.data());
}

std::string svg_open(double width, double height) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
           fixed(width) + "\" height=\"" + fixed(height) + "\" viewBox=\"0 0 " + fixed(width) + " " +
           fixed(height) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, int size = 14, const char* anchor = "middle") {
    return "<text x=\"" + fixed(x) + "\" y=\"" + fixed(y) + "\" font-family=\"sans-serif\" font-size=\"" +
           std::to_string(size) + "\" text-anchor=\"" + anchor + "\">" + xml_escape(s) + "</text>\n";
}

} // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::add_row(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw std::invalid_argument("CsvWriter: row width does not match header");
    rows_.push_back(std::move(row));
}

std::string CsvWriter::escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string CsvWriter::str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += escape(fields[i]);
        }
        out += "\r\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
}

void CsvWriter::save(const std::filesystem::path& path) const { write_text_file(path, str()); }

void write_field_csv(const std::filesystem::path& path, const Eigen::VectorXd& values, int dim, int side) {
    CsvWriter csv(dim == 1 ? std::vector<std::string>{"i", "value"} : std::vector<std::string>{"i", "j", "value"});
    for (Eigen::Index p = 0; p < values.size(); ++p) {
        if (dim == 1) {
            csv.add_row({std::to_string(p), format_double(values[p])});
        } else {
            csv.add_row({std::to_string(p / side), std::to_string(p % side), format_double(values[p])});
        }
    }
    csv.save(path);
}

void write_heatmap_svg(const std::filesystem::path& path, const Eigen::VectorXd& values, int side,
                       const std::string& title) {
    if (values.size() != static_cast<Eigen::Index>(side) * side) {
        throw std::invalid_argument("write_heatmap_svg: values do not fill the grid");
    }
    const double cell = std::max(1.0, 400.0 / side);
    const double plot = cell * side;
    const double margin = 40;
    const double lo = values.minCoeff();
    const double hi = values.maxCoeff();
    const double span = hi > lo ? hi - lo : 1.0;
    std::string svg = svg_open(plot + 2 * margin + 60, plot + 2 * margin);
    svg += text(margin + plot / 2, margin - 14, title);
    for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j) {
            const double v = values[static_cast<Eigen::Index>(i) * side + j];
            svg += "<rect x=\"" + fixed(margin + i * cell) + "\" y=\"" + fixed(margin + (side - 1 - j) * cell) +
                   "\" width=\"" + fixed(cell) + "\" height=\"" + fixed(cell) + "\" fill=\"" +
                   colour((v - lo) / span) + "\"/>\n";
        }
    }
    // Colour bar with end labels.
    const double bx = margin + plot + 15;
    for (int k = 0; k < 50; ++k) {
        svg += "<rect x=\"" + fixed(bx) + "\" y=\"" + fixed(margin + plot * (49 - k) / 50.0) + "\" width=\"12\" height=\"" +
               fixed(plot / 50.0 + 0.5) + "\" fill=\"" + colour(k / 49.0) + "\"/>\n";
    }
    svg += text(bx + 6, margin - 2, format_double(hi), 10);
    svg += text(bx + 6, margin + plot + 14, format_double(lo), 10);
    svg += "</svg>\n";
    write_text_file(path, svg);
}

void write_eigenvalue_svg(const std::filesystem::path& path, const std::vector<std::complex<double>>& values,
                          const std::string& title) {
    double extent = 1.1;
    for (const auto& z : values) extent = std::max(extent, 1.05 * std::abs(z));
    const double size = 420;
    const double margin = 40;
    const double scale = (size / 2) / extent;
    const double cx = margin + size / 2;
    const double cy = margin + size / 2;
    std::string svg = svg_open(size + 2 * margin, size + 2 * margin);
    svg += text(cx, margin - 14, title);
    svg += "<line x1=\"" + fixed(margin) + "\" y1=\"" + fixed(cy) + "\" x2=\"" + fixed(margin + size) + "\" y2=\"" +
           fixed(cy) + "\" stroke=\"#999\"/>\n";
    svg += "<line x1=\"" + fixed(cx) + "\" y1=\"" + fixed(margin) + "\" x2=\"" + fixed(cx) + "\" y2=\"" +
           fixed(margin + size) + "\" stroke=\"#999\"/>\n";
    svg += "<circle cx=\"" + fixed(cx) + "\" cy=\"" + fixed(cy) + "\" r=\"" + fixed(scale) +
           "\" fill=\"none\" stroke=\"#444\" stroke-dasharray=\"4 3\"/>\n";
    for (const auto& z : values) {
        svg += "<circle cx=\"" + fixed(cx + scale * z.real()) + "\" cy=\"" + fixed(cy - scale * z.imag()) +
               "\" r=\"3\" fill=\"#b2182b\"/>\n";
    }
    svg += text(margin + size, cy + 14, "Re", 11, "end");
    svg += text(cx + 6, margin + 10, "Im", 11, "start");
    svg += "</svg>\n";
    write_text_file(path, svg);
}

void write_curve_svg(const std::filesystem::path& path, const std::vector<double>& x,
                     const std::vector<std::pair<std::string, std::vector<double>>>& series,
                     const std::string& title) {
    const double w = 520;
    const double h = 320;
    const double margin = 50;
    double ylo = std::numeric_limits<double>::infinity();
    double yhi = -ylo;
    for (const auto& [name, ys] : series) {
        for (double y : ys) {
            if (std::isfinite(y) && y > 0) {
                ylo = std::min(ylo, std::log10(y));
                yhi = std::max(yhi, std::log10(y));
            }
        }
    }
    if (!std::isfinite(ylo)) ylo = yhi = 0;
    if (yhi - ylo < 1e-9) yhi = ylo + 1;
    const double xlo = x.empty() ? 0 : x.front();
    const double xhi = x.empty() || x.back() == xlo ? xlo + 1 : x.back();
    auto px = [&](double v) { return margin + (v - xlo) / (xhi - xlo) * w; };
    auto py = [&](double v) { return margin + h - (std::log10(v) - ylo) / (yhi - ylo) * h; };
    static constexpr std::array<const char*, 4> kColours{"#2166ac", "#b2182b", "#1b7837", "#762a83"};
    std::string svg = svg_open(w + 2 * margin, h + 2 * margin);
    svg += text(margin + w / 2, margin - 20, title);
    svg += "<rect x=\"" + fixed(margin) + "\" y=\"" + fixed(margin) + "\" width=\"" + fixed(w) + "\" height=\"" +
           fixed(h) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        std::string points;
        for (std::size_t i = 0; i < x.size() && i < series[s].second.size(); ++i) {
            const double y = series[s].second[i];
            if (!std::isfinite(y) || y <= 0) continue;
            points += fixed(px(x[i])) + "," + fixed(py(y)) + " ";
        }
        const char* c = kColours[s % kColours.size()];
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(c) + "\" points=\"" + points + "\"/>\n";
        svg += "<text x=\"" + fixed(margin + w - 5) + "\" y=\"" + fixed(margin + 15 + 15 * s) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\" fill=\"" + c + "\">" +
               xml_escape(series[s].first) + "</text>\n";
    }
    svg += text(margin, margin + h + 16, format_double(xlo), 10);
    svg += text(margin + w, margin + h + 16, format_double(xhi), 10);
    svg += text(margin - 5, margin + 4, "1e" + fixed(yhi), 10, "end");
    svg += text(margin - 5, margin + h, "1e" + fixed(ylo), 10, "end");
    svg += "</svg>\n";
    write_text_file(path, svg);
}

void Manifest::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void Manifest::add_artifact(const std::filesystem::path& root, const std::filesystem::path& file) {
    const std::string rel = std::filesystem::relative(file, root).generic_string();
    artifacts_.emplace_back(rel, sha256_file(file.string()));
}

std::string Manifest::str() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
    for (const auto& [name, sum] : artifacts_) out += "artifact." + name + "=sha256:" + sum + "\n";
    return out;
}

void Manifest::save(const std::filesystem::path& path) const { write_text_file(path, str()); }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

} // namespace sabon
