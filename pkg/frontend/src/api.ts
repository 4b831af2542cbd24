/** Typed client for the animation service HTTP API. */

export interface LintFinding {
  code: string;
  severity: "error" | "warning";
  message: string;
}

export interface LintReport {
  error_count: number;
  warning_count: number;
  findings: LintFinding[];
}

export interface SessionCreated {
  session_id: string;
  element_index: { id: string; kind: string; depth: number; parent_id: string | null }[];
  preprocessed_svg: string;
  warnings: string[];
}

export interface DesignEvent {
  ordinal: number;
  design_id: string;
  css: string;
  explanation: string;
  lint: LintReport;
}

export interface DesignRecord {
  id: string;
  scope_index: number;
  css_current: string;
  css_original: string;
  explanation: string;
  lint: LintReport | null;
}

export interface SessionDoc {
  schema_version: number;
  session: {
    id: string;
    iterations: {
      prompt_text: string;
      is_regenerate: boolean;
      failed: boolean;
      designs: DesignRecord[];
    }[];
    favorites: string[];
  };
}

export interface EntrySource {
  item_index: number;
  frame_index: number | null;
  decl_index: number;
  property: string;
}

export interface SheetEntry {
  property: string;
  widget: string;
  value: unknown;
  source: EntrySource;
  options?: string[];
  preset?: string;
}

export interface PropertySheet {
  groups: { target: string; element_id: string | null; entries: SheetEntry[] }[];
}

export type StreamEvent =
  | { event: "chunk"; data: { text: string } }
  | { event: "design"; data: DesignEvent }
  | { event: "done"; data: { elapsed_seconds: number } }
  | { event: "error"; data: { code: string; message: string } };

export class ApiError extends Error {
  constructor(readonly status: number, readonly code: string, message: string) {
    super(message);
  }
}

async function expectOk(response: Response): Promise<Response> {
  if (response.ok) return response;
  let code = "http_error";
  let message = response.statusText;
  try {
    const body = await response.json();
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(response.status, code, message);
}

/** Parse one complete SSE block ("event: x\ndata: {...}"). */
function parseBlock(block: string): StreamEvent | null {
  const lines = block.split("\n");
  const eventLine = lines.find((l) => l.startsWith("event: "));
  const dataLines = lines.filter((l) => l.startsWith("data: "));
  if (!eventLine || dataLines.length === 0) return null;
  return {
    event: eventLine.slice("event: ".length),
    data: JSON.parse(dataLines.map((l) => l.slice("data: ".length)).join("\n")),
  } as StreamEvent;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async createSession(svg: string): Promise<SessionCreated> {
    const response = await expectOk(
      await fetch(this.url("/api/sessions"), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ svg }),
      }),
    );
    return response.json();
  }

  async getSession(sessionId: string): Promise<SessionDoc> {
    return (await expectOk(await fetch(this.url(`/api/sessions/${sessionId}`)))).json();
  }

  /**
   * Run one prompt, invoking `onEvent` for every SSE event. Resolves with the
   * final design payloads (a design event may repeat as late fields stream
   * in; the last event per design id wins).
   */
  async runIteration(
    sessionId: string,
    prompt: string,
    options: { baseDesignId?: string; onEvent?: (event: StreamEvent) => void } = {},
  ): Promise<DesignEvent[]> {
    const payload: Record<string, string> = { prompt };
    if (options.baseDesignId) payload.base_design_id = options.baseDesignId;
    const response = await expectOk(
      await fetch(this.url(`/api/sessions/${sessionId}/iterations`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
      }),
    );
    return this.consumeStream(response, options.onEvent);
  }

  async regenerate(
    sessionId: string,
    iteration: number,
    onEvent?: (event: StreamEvent) => void,
  ): Promise<DesignEvent[]> {
    const response = await expectOk(
      await fetch(this.url(`/api/sessions/${sessionId}/iterations/${iteration}/regenerate`), {
        method: "POST",
      }),
    );
    return this.consumeStream(response, onEvent);
  }

  private async consumeStream(
    response: Response,
    onEvent?: (event: StreamEvent) => void,
  ): Promise<DesignEvent[]> {
    const designs = new Map<string, DesignEvent>();
    const handle = (event: StreamEvent) => {
      if (event.event === "design") designs.set(event.data.design_id, event.data);
      onEvent?.(event);
    };
    const body = response.body;
    if (body) {
      const reader = body.getReader();
      const decoder = new TextDecoder();
      let buffer = "";
      for (;;) {
        const { done, value } = await reader.read();
        if (value) buffer += decoder.decode(value, { stream: true });
        let split;
        while ((split = buffer.indexOf("\n\n")) >= 0) {
          const event = parseBlock(buffer.slice(0, split));
          buffer = buffer.slice(split + 2);
          if (event) handle(event);
        }
        if (done) break;
      }
    } else {
      // Environments without streaming bodies still deliver the full text.
      for (const block of (await response.text()).split("\n\n")) {
        const event = parseBlock(block);
        if (event) handle(event);
      }
    }
    return [...designs.values()];
  }

  async getPropertySheet(designId: string): Promise<PropertySheet> {
    const response = await expectOk(
      await fetch(this.url(`/api/designs/${designId}/property_sheet`)),
    );
    return (await response.json()).property_sheet;
  }

  async patchProperty(
    designId: string,
    source: EntrySource,
    value: unknown,
  ): Promise<{ design: DesignRecord; property_sheet: PropertySheet }> {
    const response = await expectOk(
      await fetch(this.url(`/api/designs/${designId}/property`), {
        method: "PATCH",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ source, value }),
      }),
    );
    return response.json();
  }

  async patchCss(
    designId: string,
    css: string,
  ): Promise<{ design: DesignRecord; lint: LintReport }> {
    const response = await expectOk(
      await fetch(this.url(`/api/designs/${designId}/css`), {
        method: "PATCH",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ css }),
      }),
    );
    return response.json();
  }

  async toggleFavorite(designId: string): Promise<boolean> {
    const response = await expectOk(
      await fetch(this.url(`/api/designs/${designId}/favorite`), { method: "POST" }),
    );
    return (await response.json()).favorited;
  }
}
