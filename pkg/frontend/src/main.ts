import { ApiClient } from "./api.js";
import { App } from "./app.js";

// API base from ?api=... (defaults to same origin); ?campaign=... resumes a view.
const params = new URLSearchParams(window.location.search);
const api = new ApiClient(params.get("api") ?? "");
const app = new App(document.getElementById("app")!, api);
app.start(params.get("campaign") ?? undefined);
