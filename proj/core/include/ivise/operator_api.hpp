#pragma once

#include <stop_token>
#include <string>

#include "ivise/net.hpp"
#include "ivise/query.hpp"

namespace ivise::fog {

class FogNode;

// Line-delimited JSON operator protocol. Each request is one JSON object
// with an "op" field:
//   submit   {text, scope?, ttl_seconds?} -> {ok, op:"submitted", query_id, dispatched, warnings}
//   cancel   {query_id}                   -> {ok, op:"cancelled", query_id}
//   stream   {query_id}                   -> {ok, op:"streaming"} then {event:"report", report}
//                                            lines and finally {event:"closed", state}
//   offline  {text, from?, to?}           -> {ok, op:"results", reports}
//   edges                                 -> {ok, op:"edges", edges}
//   sessions                              -> {ok, op:"sessions", sessions}
//   stats                                 -> {ok, op:"stats", ...}
// Failures answer {ok:false, error:<kind name>, message, detail}.
inline constexpr const char* kOperatorProtocol = "ivise-operator v1";

// Handles one non-streaming request line and returns the response line.
std::string handle_operator_request(FogNode& node, const std::string& line);

// Serves one operator connection until it closes or stop is requested.
void serve_operator_connection(FogNode& node, net::Socket& socket, std::stop_token stop);

std::string report_to_json(const query::MatchReport& report);
query::MatchReport report_from_json(const std::string& text);

}  // namespace ivise::fog
