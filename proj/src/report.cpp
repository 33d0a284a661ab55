#include "hinet/report.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "hinet/util.hpp"
#include "hinet/volume.hpp"

namespace fs = std::filesystem;

namespace hinet {

namespace {

std::string fmt(const char* format, ...) {
    char buf[256];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

std::string mean_std(const MetricStats& s) {
    if (s.count == 0) return "(no data)";
    return fmt("%.4f +/- %.4f", s.mean, s.stddev);
}

}  // namespace

void write_slice_csv(const std::string& path, const std::vector<SliceEval>& slices) {
    std::ostringstream os;
    os << "subject,slice,psnr,nmse,ssim\n";
    for (const auto& s : slices) {
        os << s.subject << ',' << s.slice << ','
           << fmt("%.17g,%.17g,%.17g", s.psnr, s.nmse, s.ssim) << '\n';
    }
    write_text_file(path, os.str());
}

std::vector<SliceEval> read_slice_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const int c_subject = t.column("subject");
    const int c_slice = t.column("slice");
    const int c_psnr = t.column("psnr");
    const int c_nmse = t.column("nmse");
    const int c_ssim = t.column("ssim");
    std::vector<SliceEval> out;
    for (const auto& row : t.rows) {
        SliceEval e;
        e.subject = row[static_cast<size_t>(c_subject)];
        e.slice = std::stoi(row[static_cast<size_t>(c_slice)]);
        e.psnr = std::strtod(row[static_cast<size_t>(c_psnr)].c_str(), nullptr);
        e.nmse = std::strtod(row[static_cast<size_t>(c_nmse)].c_str(), nullptr);
        e.ssim = std::strtod(row[static_cast<size_t>(c_ssim)].c_str(), nullptr);
        out.push_back(std::move(e));
    }
    return out;
}

std::string eval_summary_text(const EvalSummary& s) {
    std::ostringstream os;
    os << "slices evaluated: " << s.psnr.count + s.psnr.excluded << "\n";
    os << "psnr: " << mean_std(s.psnr);
    if (s.psnr.excluded > 0)
        os << "  (" << s.psnr.excluded << " infinite value(s) excluded)";
    os << "\n";
    os << "nmse: " << mean_std(s.nmse) << "\n";
    os << "ssim: " << mean_std(s.ssim) << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// PNG writing (8-bit grayscale, zlib-compressed, no external image library)

namespace {

void put_u32_be(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
    put_u32_be(out, static_cast<uint32_t>(data.size()));
    const size_t crc_start = out.size();
    out.append(type, 4);
    out.append(data);
    uLong crc = crc32(0L, nullptr, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(out.data() + crc_start),
                static_cast<uInt>(out.size() - crc_start));
    put_u32_be(out, static_cast<uint32_t>(crc));
}

unsigned char to_byte(float v) {
    // network domain [-1, 1] -> display byte
    const float scaled = (v + 1.0f) * 0.5f * 255.0f;
    const float clamped = std::min(255.0f, std::max(0.0f, scaled));
    return static_cast<unsigned char>(std::lround(clamped));
}

}  // namespace

void write_png_gray(const std::string& path, const Tensor& img) {
    HINET_CHECK(img.ndim() == 2, DimensionError, "png writer expects a 2-d image, got ",
                img.shape_str());
    const int rows = img.dim(0), cols = img.dim(1);

    std::string raw;
    raw.reserve(static_cast<size_t>(rows) * (static_cast<size_t>(cols) + 1));
    for (int r = 0; r < rows; ++r) {
        raw.push_back('\0');  // scanline filter: none
        for (int c = 0; c < cols; ++c)
            raw.push_back(static_cast<char>(to_byte(img[static_cast<int64_t>(r) * cols + c])));
    }

    uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
    std::string compressed(comp_len, '\0');
    const int rc = compress2(reinterpret_cast<Bytef*>(compressed.data()), &comp_len,
                             reinterpret_cast<const Bytef*>(raw.data()),
                             static_cast<uLong>(raw.size()), 6);
    HINET_CHECK(rc == Z_OK, IoError, "png compression failed (zlib rc ", rc, ")");
    compressed.resize(comp_len);

    std::string ihdr;
    put_u32_be(ihdr, static_cast<uint32_t>(cols));
    put_u32_be(ihdr, static_cast<uint32_t>(rows));
    ihdr.push_back(8);     // bit depth
    ihdr.push_back(0);     // grayscale
    ihdr.push_back(0);     // deflate
    ihdr.push_back(0);     // adaptive filtering
    ihdr.push_back(0);     // no interlace

    std::string out("\x89PNG\r\n\x1a\n", 8);
    put_chunk(out, "IHDR", ihdr);
    put_chunk(out, "IDAT", compressed);
    put_chunk(out, "IEND", "");
    write_text_file(path, out);
}

void write_image_grid(const std::string& path, const std::vector<SliceResult>& slices,
                      int max_rows) {
    HINET_CHECK(!slices.empty(), DataError, "image grid needs at least one slice");
    const int n = std::min<int>(max_rows, static_cast<int>(slices.size()));
    const int h = slices[0].x1.dim(0), w = slices[0].x1.dim(1);
    const int pad = 2;
    Tensor grid = Tensor::full({n * (h + pad) + pad, 4 * (w + pad) + pad}, 1.0f);
    for (int r = 0; r < n; ++r) {
        const Tensor* cols[4] = {&slices[static_cast<size_t>(r)].x1,
                                 &slices[static_cast<size_t>(r)].x2,
                                 &slices[static_cast<size_t>(r)].target,
                                 &slices[static_cast<size_t>(r)].synthesized};
        for (int c = 0; c < 4; ++c) {
            const Tensor& img = *cols[c];
            check_same_shape(slices[0].x1, img, "image grid cells");
            const int r0 = pad + r * (h + pad), c0 = pad + c * (w + pad);
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j)
                    grid[static_cast<int64_t>(r0 + i) * grid.dim(1) + (c0 + j)] =
                        img[static_cast<int64_t>(i) * w + j];
        }
    }
    write_png_gray(path, grid);
}

// ---------------------------------------------------------------------------
// Loss-curve SVG

namespace {

const char* kSeriesColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                               "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

struct PlotRect {
    double x0, y0, w, h;
};

}  // namespace

void write_loss_curves_svg(const std::string& loss_log_path, const std::string& svg_path) {
    const CsvTable t = read_csv(loss_log_path);
    HINET_CHECK(t.header.size() > 3, DataError, "loss log has no loss columns: ", loss_log_path);
    HINET_CHECK(!t.rows.empty(), DataError, "loss log has no rows: ", loss_log_path);

    // Columns past epoch,step,lr are the plotted series.
    std::vector<std::string> names(t.header.begin() + 3, t.header.end());
    const size_t n_series = names.size();
    const size_t n_rows = t.rows.size();
    std::vector<std::vector<double>> series(n_series, std::vector<double>(n_rows));
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (size_t r = 0; r < n_rows; ++r) {
        for (size_t s = 0; s < n_series; ++s) {
            const double v = std::strtod(t.rows[r][s + 3].c_str(), nullptr);
            series[s][r] = v;
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    HINET_CHECK(std::isfinite(lo) && std::isfinite(hi), DataError,
                "loss log contains no finite values: ", loss_log_path);
    if (hi == lo) {
        hi += 1.0;
        lo -= 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    const double width = 960, height = 560;
    const PlotRect plot{70, 30, width - 70 - 170, height - 30 - 50};
    const auto map_x = [&](size_t r) {
        return plot.x0 + (n_rows == 1 ? 0.5 : static_cast<double>(r) /
                                                  static_cast<double>(n_rows - 1)) *
                             plot.w;
    };
    const auto map_y = [&](double v) { return plot.y0 + (hi - v) / (hi - lo) * plot.h; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    os << "<rect x=\"" << plot.x0 << "\" y=\"" << plot.y0 << "\" width=\"" << plot.w
       << "\" height=\"" << plot.h << "\" fill=\"none\" stroke=\"#333333\"/>\n";

    // y-axis ticks
    for (int k = 0; k <= 5; ++k) {
        const double v = lo + (hi - lo) * k / 5.0;
        const double y = map_y(v);
        os << "<line x1=\"" << plot.x0 - 4 << "\" y1=\"" << y << "\" x2=\"" << plot.x0
           << "\" y2=\"" << y << "\" stroke=\"#333333\"/>\n";
        os << "<text x=\"" << plot.x0 - 8 << "\" y=\"" << y + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
           << fmt("%.3g", v) << "</text>\n";
    }
    // x-axis ticks at first, middle, last step
    const int c_step = t.column("step");
    const size_t xticks[3] = {0, n_rows / 2, n_rows - 1};
    for (size_t r : xticks) {
        const double x = map_x(r);
        os << "<line x1=\"" << x << "\" y1=\"" << plot.y0 + plot.h << "\" x2=\"" << x
           << "\" y2=\"" << plot.y0 + plot.h + 4 << "\" stroke=\"#333333\"/>\n";
        os << "<text x=\"" << x << "\" y=\"" << plot.y0 + plot.h + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
           << t.rows[r][static_cast<size_t>(c_step)] << "</text>\n";
    }
    os << "<text x=\"" << plot.x0 + plot.w / 2 << "\" y=\"" << height - 14
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << "global step</text>\n";

    // one polyline per series, thinned to at most ~2000 points
    const size_t stride = std::max<size_t>(1, n_rows / 2000);
    for (size_t s = 0; s < n_series; ++s) {
        const char* color = kSeriesColors[s % (sizeof(kSeriesColors) / sizeof(*kSeriesColors))];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
        for (size_t r = 0; r < n_rows; r += stride) {
            const double v = series[s][r];
            if (!std::isfinite(v)) continue;
            os << fmt("%.1f,%.1f ", map_x(r), map_y(v));
        }
        os << "\"/>\n";
        const double ly = plot.y0 + 16 + 18 * static_cast<double>(s);
        os << "<line x1=\"" << plot.x0 + plot.w + 12 << "\" y1=\"" << ly - 4 << "\" x2=\""
           << plot.x0 + plot.w + 34 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << plot.x0 + plot.w + 40 << "\" y=\"" << ly
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << names[s] << "</text>\n";
    }
    os << "</svg>\n";
    write_text_file(svg_path, os.str());
}

// ---------------------------------------------------------------------------
// Variant comparison table

std::string ablation_table_text(const AblationResult& r) {
    std::ostringstream os;
    os << fmt("%-14s %-22s %-22s %-22s %s\n", "variant", "psnr", "nmse", "ssim", "runs");
    for (const auto& row : r.rows) {
        std::string runs = fmt("%d/%d", row.runs_ok, row.runs_total);
        if (row.runs_ok < row.runs_total)
            runs += fmt("  (%d gap(s))", row.runs_total - row.runs_ok);
        os << fmt("%-14s %-22s %-22s %-22s %s\n", row.variant.c_str(),
                  mean_std(row.psnr).c_str(), mean_std(row.nmse).c_str(),
                  mean_std(row.ssim).c_str(), runs.c_str());
    }
    bool any_failed = false;
    for (const auto& run : r.runs) {
        if (run.ok) continue;
        if (!any_failed) {
            os << "\nfailed runs:\n";
            any_failed = true;
        }
        os << "  " << run.variant << " seed " << run.seed << ": " << run.error << "\n";
    }
    return os.str();
}

void write_ablation_artifacts(const std::string& run_dir, const AblationResult& r) {
    fs::create_directories(run_dir);
    write_text_file((fs::path(run_dir) / "ablation_table.txt").string(), ablation_table_text(r));
    std::ostringstream os;
    os << "variant,runs_ok,runs_total,slice_count,psnr_mean,psnr_std,nmse_mean,nmse_std,"
          "ssim_mean,ssim_std\n";
    for (const auto& row : r.rows) {
        os << row.variant << ',' << row.runs_ok << ',' << row.runs_total << ','
           << row.psnr.count + row.psnr.excluded << ','
           << fmt("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", row.psnr.mean, row.psnr.stddev,
                  row.nmse.mean, row.nmse.stddev, row.ssim.mean, row.ssim.stddev)
           << '\n';
    }
    write_text_file((fs::path(run_dir) / "ablation_rows.csv").string(), os.str());
}

AblationResult rederive_ablation(const std::string& run_dir) {
    AblationResult result;
    for (const auto& spec : all_variants()) {
        const fs::path vdir = fs::path(run_dir) / spec.name;
        if (!fs::is_directory(vdir)) continue;
        AblationRow row;
        row.variant = spec.name;
        std::vector<double> psnr_pool, nmse_pool, ssim_pool;
        std::vector<fs::path> seed_dirs;
        for (const auto& entry : fs::directory_iterator(vdir))
            if (entry.is_directory() && entry.path().filename().string().rfind("seed_", 0) == 0)
                seed_dirs.push_back(entry.path());
        std::sort(seed_dirs.begin(), seed_dirs.end());
        for (const auto& sdir : seed_dirs) {
            AblationRun run;
            run.variant = spec.name;
            run.seed = std::strtoull(sdir.filename().string().c_str() + 5, nullptr, 10);
            const fs::path csv = sdir / "eval_slices.csv";
            if (fs::exists(csv)) {
                run.eval.slices = read_slice_csv(csv.string());
                run.ok = true;
                for (const auto& s : run.eval.slices) {
                    psnr_pool.push_back(s.psnr);
                    nmse_pool.push_back(s.nmse);
                    ssim_pool.push_back(s.ssim);
                }
                row.runs_ok += 1;
            } else {
                run.error = "no eval_slices.csv (run failed before evaluation)";
            }
            row.runs_total += 1;
            result.runs.push_back(std::move(run));
        }
        if (row.runs_total == 0) continue;
        row.psnr = aggregate_stats(psnr_pool);
        row.nmse = aggregate_stats(nmse_pool);
        row.ssim = aggregate_stats(ssim_pool);
        result.rows.push_back(std::move(row));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Full report

std::vector<std::string> emit_report(const std::string& run_dir) {
    HINET_CHECK(fs::is_directory(run_dir), DataError, "run directory not found: ", run_dir);
    const fs::path out_dir = fs::path(run_dir) / "report";
    fs::create_directories(out_dir);
    std::vector<std::string> written;

    // 1. loss curves for every loss log under the run
    std::vector<std::pair<fs::path, std::string>> logs;  // (log path, svg name)
    if (fs::exists(fs::path(run_dir) / "loss_log.csv")) {
        logs.emplace_back(fs::path(run_dir) / "loss_log.csv", "loss_curves.svg");
    } else {
        for (const auto& spec : all_variants()) {
            const fs::path vdir = fs::path(run_dir) / spec.name;
            if (!fs::is_directory(vdir)) continue;
            std::vector<fs::path> seed_dirs;
            for (const auto& entry : fs::directory_iterator(vdir))
                if (entry.is_directory()) seed_dirs.push_back(entry.path());
            std::sort(seed_dirs.begin(), seed_dirs.end());
            for (const auto& sdir : seed_dirs) {
                const fs::path log = sdir / "loss_log.csv";
                if (fs::exists(log))
                    logs.emplace_back(log, "loss_curves_" + spec.name + "_" +
                                               sdir.filename().string() + ".svg");
            }
        }
    }
    HINET_CHECK(!logs.empty(), DataError, "no loss log found under ", run_dir,
                "; train (or ablate) must run before report");
    for (const auto& [log, name] : logs) {
        const fs::path svg = out_dir / name;
        write_loss_curves_svg(log.string(), svg.string());
        written.push_back(svg.string());
    }

    // 2. metric table from the evaluation slice CSV
    const fs::path eval_csv = fs::path(run_dir) / "eval_slices.csv";
    if (fs::exists(eval_csv)) {
        EvalSummary s;
        s.slices = read_slice_csv(eval_csv.string());
        std::vector<double> psnr, nmse, ssim;
        for (const auto& e : s.slices) {
            psnr.push_back(e.psnr);
            nmse.push_back(e.nmse);
            ssim.push_back(e.ssim);
        }
        s.psnr = aggregate_stats(psnr);
        s.nmse = aggregate_stats(nmse);
        s.ssim = aggregate_stats(ssim);
        const fs::path txt = out_dir / "metrics.txt";
        write_text_file(txt.string(), eval_summary_text(s));
        written.push_back(txt.string());
    }

    // 3. image grid from saved evaluation slices
    const fs::path slices_dir = fs::path(run_dir) / "report_slices";
    if (fs::is_directory(slices_dir)) {
        std::vector<fs::path> stems;
        for (const auto& entry : fs::directory_iterator(slices_dir)) {
            const std::string name = entry.path().filename().string();
            if (name.size() > 7 && name.substr(name.size() - 7) == "_y.hinv")
                stems.push_back(entry.path().parent_path() /
                                name.substr(0, name.size() - 7));
        }
        std::sort(stems.begin(), stems.end());
        std::vector<SliceResult> slices;
        for (const auto& stem : stems) {
            SliceResult sr;
            sr.x1 = volume_slice(load_volume_hinv(stem.string() + "_x1.hinv"), 0);
            sr.x2 = volume_slice(load_volume_hinv(stem.string() + "_x2.hinv"), 0);
            sr.target = volume_slice(load_volume_hinv(stem.string() + "_y.hinv"), 0);
            sr.synthesized = volume_slice(load_volume_hinv(stem.string() + "_yhat.hinv"), 0);
            slices.push_back(std::move(sr));
        }
        if (!slices.empty()) {
            const fs::path png = out_dir / "image_grid.png";
            write_image_grid(png.string(), slices);
            written.push_back(png.string());
        }
    }

    // 4. variant comparison table, re-derived from the per-run CSVs
    const AblationResult abl = rederive_ablation(run_dir);
    if (!abl.rows.empty()) {
        const fs::path txt = out_dir / "ablation_table.txt";
        write_text_file(txt.string(), ablation_table_text(abl));
        written.push_back(txt.string());
    }

    return written;
}

}  // namespace hinet
