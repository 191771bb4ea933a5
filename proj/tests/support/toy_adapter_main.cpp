// Serves a ToyModel over stdin/stdout for subprocess transport tests.
#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "protoscore/error.hpp"
#include "protoscore/io.hpp"
#include "toy_model.hpp"

int main(int argc, char** argv) {
  using namespace protoscore;
  CLI::App app{"toy model adapter"};
  std::string model_path;
  testing::ServerFaults faults;
  app.add_option("--model", model_path, "toy model JSON")->required();
  app.add_option("--protocol", faults.protocol);
  app.add_option("--crash-after", faults.crash_after);
  app.add_option("--hang-after", faults.hang_after);
  app.add_flag("--garbage-hello", faults.garbage_hello);
  app.add_flag("--wrong-id", faults.wrong_id);
  CLI11_PARSE(app, argc, argv);

  testing::ToyServer server(testing::toy_model_from_json(io::read_json_file(model_path)), faults);
  std::string line;
  while (std::getline(std::cin, line)) {
    std::optional<std::string> reply;
    try {
      reply = server.handle_line(line);
    } catch (const Error&) {
      std::cerr << "toy adapter: crashing on purpose\n";
      return 7;
    }
    if (server.hang_now()) std::this_thread::sleep_for(std::chrono::hours(1));
    if (!reply) return 0;
    std::cout << *reply << '\n' << std::flush;
  }
  return 0;
}
