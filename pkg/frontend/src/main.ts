import { ApiClient } from "./api";
import { App } from "./app";
import "./styles.css";

const base = new URLSearchParams(location.search).get("service") ?? "";
const app = new App(document.getElementById("app")!, new ApiClient(base));
void app.start();
