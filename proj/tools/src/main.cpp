#include <iostream>

#include "randopt/expcli.hpp"

int main(int argc, char** argv) {
  using namespace randopt::expcli;
  try {
    const ParsedCommand parsed = parse_command_line(argc, argv);
    if (parsed.report_dir) {
      const Report rep = emit_report(*parsed.report_dir);
      std::cout << rep.to_text();
      return rep.integrity_flags() == 0 && rep.row_count_ok ? 0 : 3;
    }
    if (!parsed.config) return parsed.exit_code;
    const RunManifest m = run_experiment(*parsed.config);
    std::cout << "wrote " << m.outputs.size() << " outputs to " << parsed.config->out.string() << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
