#include "embrec/train/config.hpp"

#include <sstream>

#include "embrec/binary_io.hpp"
#include "embrec/errors.hpp"
#include "embrec/text.hpp"

namespace embrec::train {

void ExperimentConfig::validate() const {
  variant.validate();
  if (batch_size == 0) throw ContractError("config: batch_size must be positive");
  if (cnn.channels.empty()) throw ContractError("config: channels must list at least one width");
  for (std::size_t c : cnn.channels) {
    if (c == 0) throw ContractError("config: channel widths must be positive");
  }
  if (!(optimizer.lr0 > 0.0)) throw ContractError("config: lr0 must be positive");
  if (optimizer.momentum < 0.0 || optimizer.momentum >= 1.0) {
    throw ContractError("config: momentum must be in [0, 1)");
  }
  if (optimizer.decay < 0.0) throw ContractError("config: decay must be non-negative");
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(where + ": expected 'key = value'");
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string value(text::trim(line.substr(eq + 1)));
    auto number = [&] {
      const auto v = text::parse_double(value);
      if (!v) throw ParseError(where + ": '" + key + "' needs a number, got '" + value + "'");
      return *v;
    };
    auto count = [&] {
      const auto v = text::parse_int(value);
      if (!v || *v < 0) throw ParseError(where + ": '" + key + "' needs a non-negative integer, got '" + value + "'");
      return static_cast<std::size_t>(*v);
    };
    if (key == "variant") {
      c.variant.kind = model::parse_variant_kind(value);
    } else if (key == "n_negatives") {
      c.variant.n_negatives = count();
    } else if (key == "margin") {
      c.variant.margin = static_cast<float>(number());
    } else if (key == "context_duration_s") {
      c.variant.context_duration = number();
    } else if (key == "batch_size") {
      c.batch_size = count();
    } else if (key == "epochs") {
      c.epochs = count();
    } else if (key == "patience") {
      c.patience = count();
    } else if (key == "seed") {
      c.seed = count();
    } else if (key == "lr0") {
      c.optimizer.lr0 = number();
    } else if (key == "momentum") {
      c.optimizer.momentum = number();
    } else if (key == "decay") {
      c.optimizer.decay = number();
    } else if (key == "split_mode") {
      c.split_mode = parse_split_mode(value);
    } else if (key == "channels") {
      c.cnn.channels.clear();
      std::string item;
      std::istringstream parts(value);
      while (std::getline(parts, item, ',')) {
        const auto v = text::parse_int(text::trim(item));
        if (!v || *v <= 0) throw ParseError(where + ": bad channel width '" + item + "'");
        c.cnn.channels.push_back(static_cast<std::size_t>(*v));
      }
    } else {
      throw ParseError(where + ": unknown key '" + key + "'");
    }
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(io::read_file(path), path.string());
}

std::string format_experiment_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "variant = " << model::variant_kind_name(c.variant.kind) << '\n'
     << "n_negatives = " << c.variant.n_negatives << '\n'
     << "margin = " << c.variant.margin << '\n'
     << "context_duration_s = " << c.variant.context_duration << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "epochs = " << c.epochs << '\n'
     << "patience = " << c.patience << '\n'
     << "seed = " << c.seed << '\n'
     << "lr0 = " << c.optimizer.lr0 << '\n'
     << "momentum = " << c.optimizer.momentum << '\n'
     << "decay = " << c.optimizer.decay << '\n'
     << "split_mode = " << split_mode_name(c.split_mode) << '\n'
     << "channels = ";
  for (std::size_t i = 0; i < c.cnn.channels.size(); ++i) os << (i ? "," : "") << c.cnn.channels[i];
  os << '\n';
  return os.str();
}

}  // namespace embrec::train
