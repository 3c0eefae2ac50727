/** Page bootstrap: read the API base URL and mount the console. */

import { mountConsole } from "./app.js";

const root = document.getElementById("app");
if (root) {
  const meta = document.querySelector('meta[name="api-base"]');
  const baseUrl = (meta?.getAttribute("content") ?? "").replace(/\/+$/, "");
  mountConsole(root, { baseUrl });
}
