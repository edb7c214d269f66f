import { ApiClient } from "./api.js";
import { createApp } from "./app.js";

function serviceBaseUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("api") ?? localStorage.getItem("ndn-api-url") ?? "http://127.0.0.1:8000";
}

document.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (!root) {
    console.error("missing #app container");
    return;
  }
  const client = new ApiClient(serviceBaseUrl());
  createApp(root, client).catch((error) => {
    root.textContent = `Cannot reach the layout service: ${error}`;
  });
});
