// Wire types mirroring the session service's documented JSON payloads.

export interface KnowledgeJson {
  color_mask: number;
  rank_mask: number;
  hinted_color: boolean;
  hinted_rank: boolean;
}

export interface PartnerCard {
  position: number;
  letter: string;
  color: string;
  rank: number;
  knowledge: KnowledgeJson;
}

export interface OwnCard {
  position: number;
  letter: string;
  knowledge: KnowledgeJson;
  possible_colors: string[];
  possible_ranks: number[];
}

export interface ActionJson {
  kind: "play" | "discard" | "hint_color" | "hint_rank";
  value: number;
}

export interface LogEntry {
  seat: number;
  action: ActionJson;
  text: string;
  touched: number[];
}

export interface GameResult {
  score: number;
  lost: boolean;
  points_before_loss: number;
}

export interface SessionView {
  protocol_version: number;
  session_id: string;
  you: number;
  status: "active" | "terminal";
  current_player: number | null;
  your_turn: boolean;
  fireworks: number[];
  hint_tokens: number;
  lives: number;
  deck_size: number;
  discards: { color: string; rank: number }[];
  partner_hand: PartnerCard[];
  own_hand: OwnCard[];
  action_log: LogEntry[];
  colors: string[];
  ranks: number[];
  instruction?: string;
  legal_actions?: ActionJson[];
  result?: GameResult;
}

export interface AgentInfo {
  id: string;
  env: string;
  kind: string;
  method_id: string;
  has_instruction: boolean;
}

export interface CreateSessionResponse {
  protocol_version: number;
  session_id: string;
  view: SessionView;
}

export interface ResultRecord {
  protocol_version: number;
  record: {
    session_id: string;
    condition: string;
    score: number;
    lost: boolean;
    survey: number[] | null;
  };
}
