// Stand-in evaluation backend for the wire-protocol tests.
//
//   fake_backend <mode>
//
// modes: nodes (distance = node count), killed, bad-handshake, malformed,
// wrong-id, silent, error, crash, slow-hello

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include "lonscape/json_io.hpp"

using lonscape::Json;

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "nodes";
  if (mode == "bad-handshake") {
    std::cout << R"({"protocol":"something-else","version":1})" << std::endl;
  } else if (mode == "slow-hello") {
    std::this_thread::sleep_for(std::chrono::seconds(5));
    return 0;
  } else {
    std::cout << R"({"protocol":"lonscape-eval","version":1})" << std::endl;
  }

  std::string line;
  while (std::getline(std::cin, line)) {
    const Json req = Json::parse(line);
    const auto id = req.at("id").get<long long>();
    if (mode == "malformed") {
      std::cout << "this is not json" << std::endl;
    } else if (mode == "wrong-id") {
      std::cout << Json{{"id", id + 1}, {"distance", 1.0}, {"killed", false}}.dump() << std::endl;
    } else if (mode == "silent") {
      std::this_thread::sleep_for(std::chrono::seconds(30));
    } else if (mode == "error") {
      std::cout << Json{{"id", id}, {"error", "simulator exploded"}}.dump() << std::endl;
    } else if (mode == "crash") {
      return 1;
    } else if (mode == "killed") {
      std::cout << Json{{"id", id}, {"distance", 42.0}, {"killed", true}}.dump() << std::endl;
    } else {
      const auto n = lonscape::phenotype_from_json(req.at("phenotype")).size();
      std::cout << Json{{"id", id}, {"distance", static_cast<double>(n)}, {"killed", false}}.dump() << std::endl;
    }
  }
  return 0;
}
