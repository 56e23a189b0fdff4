import { WorkbenchApp } from "./app.js";
import { WorkbenchClient } from "./client.js";

const root = document.getElementById("app");
if (root) {
  const params = new URLSearchParams(window.location.search);
  const app = new WorkbenchApp(root, new WorkbenchClient());
  void app.start(params.get("session") ?? undefined);
}
