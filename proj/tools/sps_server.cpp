/*
Copyright 2026 The spsweb Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "spsweb/config.hpp"
#include "spsweb/engine.hpp"
#include "spsweb/http_service.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sensor planning service with simulated assets"};
  std::string config_path;
  std::string host_override;
  int port_override = 0;
  app.add_option("--config", config_path,
                 "service configuration file (falls back to $SPS_CONFIG)");
  app.add_option("--host", host_override, "bind address override");
  app.add_option("--port", port_override, "port override");
  CLI11_PARSE(app, argc, argv);

  if (config_path.empty()) {
    if (const char* env = std::getenv("SPS_CONFIG")) config_path = env;
  }
  if (config_path.empty()) {
    std::fprintf(stderr, "sps_server: no configuration (--config or SPS_CONFIG)\n");
    return 1;
  }

  try {
    spsweb::service::ServiceConfig config = spsweb::service::load_config(config_path);
    if (!host_override.empty()) config.host = host_override;
    if (port_override > 0) config.port = port_override;

    spsweb::service::Engine engine(config);
    httplib::Server server;
    spsweb::service::register_routes(server, engine);

    std::fprintf(stderr, "sps_server: listening on http://%s:%d/sps (%zu assets, %zu procedures)\n",
                 config.host.c_str(), config.port, config.assets.size(),
                 config.procedures.size());
    if (!server.listen(config.host, config.port)) {
      std::fprintf(stderr, "sps_server: cannot bind %s:%d\n", config.host.c_str(),
                   config.port);
      return 1;
    }
  } catch (const spsweb::SpsError& e) {
    std::fprintf(stderr, "sps_server: %s\n", e.what());
    return 1;
  }
  return 0;
}
