use serde::{Deserialize, Serialize};

use crate::primitives::{Ciphertext, Digest};

/// `⟨NID, a_i, r_u⟩`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoginRequest {
    pub nid: Ciphertext,
    pub a: Digest,
    #[serde(with = "crate::hexser::vec")]
    pub r_u: Vec<u8>,
}

/// `⟨r_s, B_i, h(SK || ID_i) ⊕ NID*⟩`. The server tag is called `auth_tag`
/// here to keep it apart from the biometric template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoginReply {
    #[serde(with = "crate::hexser::vec")]
    pub r_s: Vec<u8>,
    pub auth_tag: Digest,
    #[serde(with = "crate::hexser::vec")]
    pub masked_nid: Vec<u8>,
}

/// `C_i`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfirm {
    pub c: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    LoginRequest(LoginRequest),
    LoginReply(LoginReply),
    SessionConfirm(SessionConfirm),
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::LoginRequest(_) => "login_request",
            Message::LoginReply(_) => "login_reply",
            Message::SessionConfirm(_) => "session_confirm",
        }
    }
}

impl From<LoginRequest> for Message {
    fn from(m: LoginRequest) -> Self {
        Message::LoginRequest(m)
    }
}

impl From<LoginReply> for Message {
    fn from(m: LoginReply) -> Self {
        Message::LoginReply(m)
    }
}

impl From<SessionConfirm> for Message {
    fn from(m: SessionConfirm) -> Self {
        Message::SessionConfirm(m)
    }
}
