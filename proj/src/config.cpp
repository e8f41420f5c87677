#include "neodeform/config.hpp"

#include <charconv>
#include <sstream>

#include "neodeform/io.hpp"

namespace neodeform {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw Error(ErrorCode::ConfigError, "line " + std::to_string(line) + ": " + msg);
}

template <class T>
T parse_number(std::string_view v, int line) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) fail(line, "bad number '" + std::string(v) + "'");
    return out;
}

bool parse_bool(std::string_view v, int line) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(line, "bad boolean '" + std::string(v) + "'");
}

}  // namespace

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail(line_no, "expected key = value");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        if (value.empty()) fail(line_no, "missing value for '" + std::string(key) + "'");

        if (key == "convention") {
            try {
                cfg.energy.convention = parse_convention(value);
            } catch (const Error&) {
                fail(line_no, "convention must be 'jacobian' or 'paper'");
            }
        } else if (key == "mu_tissue") cfg.energy.mu_tissue = parse_number<double>(value, line_no);
        else if (key == "mu_csf") cfg.energy.mu_csf = parse_number<double>(value, line_no);
        else if (key == "bulk_ratio") cfg.energy.bulk_ratio = parse_number<double>(value, line_no);
        else if (key == "lambda1") cfg.energy.lambda1 = parse_number<double>(value, line_no);
        else if (key == "lambda2") cfg.energy.lambda2 = parse_number<double>(value, line_no);
        else if (key == "learning_rate") cfg.learning_rate = parse_number<double>(value, line_no);
        else if (key == "max_iters") cfg.max_iters = parse_number<int>(value, line_no);
        else if (key == "epochs") cfg.epochs = parse_number<int>(value, line_no);
        else if (key == "batch_size") cfg.batch_size = parse_number<int>(value, line_no);
        else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(value, line_no);
        else if (key == "brain_only") cfg.brain_only = parse_bool(value, line_no);
        else fail(line_no, "unknown key '" + std::string(key) + "'");
    }
    try {
        cfg.energy.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
    if (cfg.learning_rate && !(*cfg.learning_rate > 0)) throw Error(ErrorCode::ConfigError, "learning_rate must be > 0");
    if (cfg.max_iters < 1 || cfg.epochs < 1 || cfg.batch_size < 1)
        throw Error(ErrorCode::ConfigError, "max_iters, epochs and batch_size must be >= 1");
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string format_config(const RunConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "convention = " << to_string(c.energy.convention) << '\n'
       << "mu_tissue = " << c.energy.mu_tissue << '\n'
       << "mu_csf = " << c.energy.mu_csf << '\n'
       << "bulk_ratio = " << c.energy.bulk_ratio << '\n'
       << "lambda1 = " << c.energy.lambda1 << '\n'
       << "lambda2 = " << c.energy.lambda2 << '\n';
    if (c.learning_rate) os << "learning_rate = " << *c.learning_rate << '\n';
    os << "max_iters = " << c.max_iters << '\n'
       << "epochs = " << c.epochs << '\n'
       << "batch_size = " << c.batch_size << '\n'
       << "seed = " << c.seed << '\n'
       << "brain_only = " << (c.brain_only ? "true" : "false") << '\n';
    return os.str();
}

}  // namespace neodeform
