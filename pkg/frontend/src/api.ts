/** Typed client for the session service HTTP API. */

export interface RequirementsDoc {
  document_type: string;
  requirements: Record<string, string>;
}

export interface DesignModule {
  Module_Sequence: number;
  Module_Name: string;
  Module_Description: string;
  Input: string;
  Output: string;
  Implementation_Details: string;
}

export interface DesignDoc {
  Document_Type: string;
  Algorithm: DesignModule[];
}

export interface CodeRevision {
  revision: number;
  source: string;
  provenance: string;
}

export interface Clarification {
  missing: string[];
  prompt_text: string;
}

export type Phase =
  | "Clarifying"
  | "Designing"
  | "Generating"
  | "AwaitingFeedback"
  | "Annotating"
  | "Done"
  | "Failed";

export interface SessionView {
  session_id: string;
  phase: Phase;
  clarification: Clarification | null;
  requirements: RequirementsDoc | null;
  design: DesignDoc | null;
  code_revisions: CodeRevision[];
  annotated: string | null;
  exhausted: boolean;
  failure: { error: string; message: string } | null;
  event_count: number;
}

export interface ArtifactsView extends SessionView {
  snapshot: Array<{
    kind: string;
    revision: number;
    created_at: string;
    payload: unknown;
  }>;
}

export interface TaskSummary {
  session_id: string;
  phase: Phase;
  event_count: number;
}

export interface KbHit {
  record_id: string;
  score: number;
  kb_kind: string;
  snippet: string;
}

export interface FeedbackPayload {
  executable: boolean;
  correct: boolean;
  error_text?: string;
  observed_output?: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: string };
    return body.detail ?? response.statusText;
  } catch {
    return response.statusText;
  }
}

export class CopClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      throw new ApiError(response.status, await parseDetail(response));
    }
    return (await response.json()) as T;
  }

  createTask(requirementText: string, config?: object): Promise<SessionView> {
    return this.request<SessionView>("/api/tasks", {
      method: "POST",
      body: JSON.stringify({ requirement_text: requirementText, config }),
    });
  }

  postAnswers(sessionId: string, answers: Record<string, string>): Promise<SessionView> {
    return this.request<SessionView>(`/api/tasks/${sessionId}/answers`, {
      method: "POST",
      body: JSON.stringify({ answers }),
    });
  }

  postFeedback(sessionId: string, payload: FeedbackPayload): Promise<SessionView> {
    return this.request<SessionView>(`/api/tasks/${sessionId}/feedback`, {
      method: "POST",
      body: JSON.stringify(payload),
    });
  }

  getTask(sessionId: string): Promise<TaskSummary> {
    return this.request<TaskSummary>(`/api/tasks/${sessionId}`);
  }

  getArtifacts(sessionId: string): Promise<ArtifactsView> {
    return this.request<ArtifactsView>(`/api/tasks/${sessionId}/artifacts`);
  }

  searchKb(
    kind: "platform" | "function" | "dataset",
    query: string,
    options: { platform?: string; language?: string; k?: number } = {},
  ): Promise<{ hits: KbHit[] }> {
    const params = new URLSearchParams({ q: query });
    if (options.platform) params.set("platform", options.platform);
    if (options.language) params.set("language", options.language);
    if (options.k) params.set("k", String(options.k));
    return this.request<{ hits: KbHit[] }>(`/api/kb/${kind}/search?${params}`);
  }
}
