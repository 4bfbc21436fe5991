import { ApiClient } from "./api.js";
import { createApp } from "./app.js";

const app = createApp(new ApiClient(""));
document.body.append(app.root);
