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

#ifndef SPSWEB_HTTP_SERVICE_HPP
#define SPSWEB_HTTP_SERVICE_HPP

#include <map>
#include <string>

#include <httplib.h>

#include "spsweb/engine.hpp"

// Thin HTTP binding: routes map one-to-one onto engine entry points, and the
// engine owns all behavior.

namespace spsweb::service {

inline void register_routes(httplib::Server& server, Engine& engine) {
  const auto apply = [](httplib::Response& res, Engine::HttpResponse r) {
    res.status = r.status;
    res.set_content(std::move(r.body), r.content_type);
  };

  server.Post("/sps", [&engine, apply](const httplib::Request& req,
                                       httplib::Response& res) {
    apply(res, engine.handle_operation(req.body));
  });

  server.Get("/sps", [&engine, apply](const httplib::Request& req,
                                      httplib::Response& res) {
    std::map<std::string, std::string> params;
    for (const auto& [key, value] : req.params) params[key] = value;
    apply(res, engine.handle_kvp(params));
  });

  server.Get("/sps/topics",
             [&engine](const httplib::Request&, httplib::Response& res) {
               res.set_content(engine.topics_document(), "application/xml");
             });

  server.Post("/sps/subscriptions",
              [&engine, apply](const httplib::Request& req, httplib::Response& res) {
                apply(res, engine.handle_subscribe(req.body));
              });

  server.Get(R"(/sps/subscriptions/([^/]+)/events)",
             [&engine, apply](const httplib::Request& req, httplib::Response& res) {
               apply(res, engine.handle_drain(req.matches[1]));
             });

  server.Get("/sps/semantics/query",
             [&engine, apply](const httplib::Request& req, httplib::Response& res) {
               apply(res, engine.handle_semantic_query(req.get_param_value("q")));
             });

  server.Get("/sps/semantics/dump",
             [&engine](const httplib::Request&, httplib::Response& res) {
               res.set_content(engine.semantic_dump(), "text/plain");
             });

  server.Post("/clock/advance",
              [&engine, apply](const httplib::Request& req, httplib::Response& res) {
                apply(res, engine.handle_clock_advance(req.body));
              });

  server.Get(R"(/results/([^/]+)/([0-9]+))",
             [&engine, apply](const httplib::Request& req, httplib::Response& res) {
               apply(res, engine.handle_result_document(req.matches[1],
                                                        req.matches[2]));
             });
}

}  // namespace spsweb::service

#endif  // SPSWEB_HTTP_SERVICE_HPP
