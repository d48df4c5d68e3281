import { ApiClient } from "./api.js";
import { ConsoleApp } from "./app.js";

// Entry point. Query parameters:
//   ?api=http://host:port   service origin (default: same origin)
//   ?session=<id>           attach to an existing session (replayed from its log)
//   ?scenario=<path>        scenario file for a new session (server-side path)

const params = new URLSearchParams(window.location.search);
const api = new ApiClient(params.get("api") ?? "");
const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const app = new ConsoleApp(root, api);
const sessionId = params.get("session");
if (sessionId) {
  void app.loadSession(sessionId);
} else {
  void app.open(params.get("scenario") ?? "scenarios/farm10.json");
}
